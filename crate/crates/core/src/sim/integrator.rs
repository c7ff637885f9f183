use nalgebra::DVector;

use crate::drem::StagePoint;
use crate::error::Result;

/// One classical fourth-order Runge-Kutta step.
///
/// `rhs(t, y, at)` receives the stage position so delayed signals can be
/// served from the grid: `Start` and `End` are exact samples, `Mid` is
/// interpolated by the delay line.
pub fn rk4_step<F>(t: f64, y: &DVector<f64>, h: f64, mut rhs: F) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>, StagePoint) -> Result<DVector<f64>>,
{
    let half = 0.5 * h;
    let k1 = rhs(t, y, StagePoint::Start)?;
    let k2 = rhs(t + half, &(y + &k1 * half), StagePoint::Mid)?;
    let k3 = rhs(t + half, &(y + &k2 * half), StagePoint::Mid)?;
    let k4 = rhs(t + h, &(y + &k3 * h), StagePoint::End)?;
    Ok(y + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0))
}
