//! Small special-function helpers on top of `statrs`.

use statrs::function::gamma::ln_gamma;

/// `ln Gamma(x + a) - ln Gamma(x)` for `x > 0`, `x + a > 0`, accurate for large `x`
/// where the plain difference of two `ln_gamma` values loses digits.
pub fn ln_gamma_diff(x: f64, a: f64) -> f64 {
    if x < 30.0 {
        return ln_gamma(x + a) - ln_gamma(x);
    }
    let y = x + a;
    let main = (x - 0.5) * (a / x).ln_1p() + a * y.ln() - a;
    let corr = (1.0 / y - 1.0 / x) / 12.0 - (y.powi(-3) - x.powi(-3)) / 360.0
        + (y.powi(-5) - x.powi(-5)) / 1260.0;
    main + corr
}
