/// Formats a float with 17 significant digits in scientific notation.
pub fn sci17(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 7.0] {
            assert_eq!(sci17(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(sci17(1.0), "1.0000000000000000e0");
    }
}
