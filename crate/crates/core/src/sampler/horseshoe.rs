use nalgebra::DVector;
use rand::Rng;

use super::state::HorseshoeState;
use super::HorseshoeAux;
use crate::linalg::inv_gamma;

/// Scale floor; keeps the inverse-Gamma rates finite when a coefficient is
/// shrunk to numerical zero.
const SCALE_FLOOR: f64 = 1e-300;

fn capped(rate: f64) -> f64 {
    rate.min(1e300)
}

/// One pass over the horseshoe conditionals in the order ψ, λ, ζ, φ.
pub fn draw_horseshoe<R: Rng + ?Sized>(
    b: &DVector<f64>,
    hs: &HorseshoeState,
    aux: HorseshoeAux,
    rng: &mut R,
) -> HorseshoeState {
    let d = b.len();
    assert_eq!(d, hs.dim(), "horseshoe dimension");
    let mut out = hs.clone();
    for j in 0..d {
        let rate = 1.0 / hs.zeta[j] + b[j] * b[j] / (2.0 * hs.lambda);
        out.psi[j] = inv_gamma(1.0, capped(rate), rng).max(SCALE_FLOOR);
    }
    let ss: f64 = (0..d).map(|j| b[j] * b[j] / out.psi[j]).sum();
    out.lambda = inv_gamma((d as f64 + 1.0) / 2.0, capped(1.0 / hs.varphi + 0.5 * ss), rng).max(SCALE_FLOOR);
    let power = match aux {
        HorseshoeAux::AsPrinted => 2,
        HorseshoeAux::MakalicSchmidt => 1,
    };
    for j in 0..d {
        out.zeta[j] = inv_gamma(1.0, capped(1.0 + out.psi[j].powi(-power)), rng);
    }
    out.varphi = inv_gamma(1.0, capped(1.0 + out.lambda.powi(-power)), rng);
    out
}
