/// 17 significant digits, enough to round-trip an f64.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}
