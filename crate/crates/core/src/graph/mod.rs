//! Directed graphs, switching signals and joint-connectivity analysis.

mod digraph;
mod joint;
mod signal;

pub use digraph::{
    find_centers, generalized_diameter, generalized_diameter_with_cap, generalized_distance,
    is_connected_undirected, is_quasi_strongly_connected, is_strongly_connected,
    longest_path_table, Digraph, DEFAULT_PATH_SEARCH_CAP,
};
pub use joint::{
    check_ijc, check_uqsc, check_usc, count_j, jc_partition, min_uqsc_window, min_usc_window,
    persistent_centers, persistent_graph, union_over, JcPartition,
};
pub use signal::{Segment, SignalDocument, SwitchingSignal};
