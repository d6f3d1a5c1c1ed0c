//! Classical fourth-order one-step integration with dense output.
//!
//! The reduced equations are integrated as `phi'' = g(w, phi, phi')` with a
//! fixed step, both directions from the initial point when it lies inside
//! the span. Dense output is cubic Hermite interpolation of the stored
//! `(phi, phi')` samples, which preserves the O(step^4) global accuracy.

use super::NumericError;

/// Right side of the second-order equation.
pub trait Rhs2 {
    fn eval(&self, w: f64, phi: f64, dphi: f64) -> Result<f64, NumericError>;
}

impl<F: Fn(f64, f64, f64) -> Result<f64, NumericError>> Rhs2 for F {
    fn eval(&self, w: f64, phi: f64, dphi: f64) -> Result<f64, NumericError> {
        self(w, phi, dphi)
    }
}

/// Dense solution: sorted samples of `(w, phi, phi')`.
#[derive(Clone, Debug)]
pub struct DenseSolution {
    nodes: Vec<(f64, f64, f64)>,
}

impl DenseSolution {
    pub fn span(&self) -> (f64, f64) {
        (self.nodes[0].0, self.nodes[self.nodes.len() - 1].0)
    }

    pub fn nodes(&self) -> &[(f64, f64, f64)] {
        &self.nodes
    }

    fn segment(&self, w: f64) -> Result<usize, NumericError> {
        let (a, b) = self.span();
        let eps = 1e-12 * (b - a).abs().max(1.0);
        if w < a - eps || w > b + eps {
            return Err(NumericError::OutOfDomain {
                value: w,
                lo: a,
                hi: b,
            });
        }
        let idx = self
            .nodes
            .partition_point(|(x, _, _)| *x <= w)
            .saturating_sub(1);
        Ok(idx.min(self.nodes.len() - 2))
    }

    /// Cubic Hermite evaluation of `phi`.
    pub fn eval(&self, w: f64) -> Result<f64, NumericError> {
        let i = self.segment(w)?;
        let (x0, p0, d0) = self.nodes[i];
        let (x1, p1, d1) = self.nodes[i + 1];
        let h = x1 - x0;
        let t = (w - x0) / h;
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        Ok(h00 * p0 + h10 * h * d0 + h01 * p1 + h11 * h * d1)
    }

    /// Derivative of the Hermite interpolant.
    pub fn eval_deriv(&self, w: f64) -> Result<f64, NumericError> {
        let i = self.segment(w)?;
        let (x0, p0, d0) = self.nodes[i];
        let (x1, p1, d1) = self.nodes[i + 1];
        let h = x1 - x0;
        let t = (w - x0) / h;
        let dh00 = 6.0 * t * t - 6.0 * t;
        let dh10 = 3.0 * t * t - 4.0 * t + 1.0;
        let dh01 = -6.0 * t * t + 6.0 * t;
        let dh11 = 3.0 * t * t - 2.0 * t;
        Ok((dh00 * p0 + dh01 * p1) / h + dh10 * d0 + dh11 * d1)
    }

    /// Second derivative of the Hermite interpolant (piecewise linear).
    pub fn eval_deriv2(&self, w: f64) -> Result<f64, NumericError> {
        let i = self.segment(w)?;
        let (x0, p0, d0) = self.nodes[i];
        let (x1, p1, d1) = self.nodes[i + 1];
        let h = x1 - x0;
        let t = (w - x0) / h;
        let d2h00 = 12.0 * t - 6.0;
        let d2h10 = 6.0 * t - 4.0;
        let d2h01 = -12.0 * t + 6.0;
        let d2h11 = 6.0 * t - 2.0;
        Ok((d2h00 * p0 + d2h01 * p1) / (h * h) + (d2h10 * d0 + d2h11 * d1) / h)
    }
}

/// Integrate `phi'' = g(w, phi, phi')` over `span` with the classical
/// one-step fourth-order scheme at fixed `step`, starting from
/// `(phi0, dphi0)` at `w0`. `w0` must lie inside the closed span; the
/// integration runs in both directions as needed, with a shortened final
/// step to land exactly on each endpoint.
pub fn integrate_second_order(
    rhs: &dyn Rhs2,
    w0: f64,
    phi0: f64,
    dphi0: f64,
    span: (f64, f64),
    step: f64,
) -> Result<DenseSolution, NumericError> {
    let (a, b) = span;
    if a >= b || step <= 0.0 {
        return Err(NumericError::BadSpan { lo: a, hi: b });
    }
    if w0 < a - 1e-12 || w0 > b + 1e-12 {
        return Err(NumericError::OutOfDomain {
            value: w0,
            lo: a,
            hi: b,
        });
    }
    let mut nodes = vec![(w0, phi0, dphi0)];
    // Forward sweep to b.
    sweep(rhs, w0, phi0, dphi0, b, step, &mut nodes)?;
    // Backward sweep to a.
    sweep(rhs, w0, phi0, dphi0, a, -step, &mut nodes)?;
    nodes.sort_by(|p, q| p.0.total_cmp(&q.0));
    nodes.dedup_by(|p, q| p.0 == q.0);
    if nodes.len() < 2 {
        return Err(NumericError::BadSpan { lo: a, hi: b });
    }
    Ok(DenseSolution { nodes })
}

fn sweep(
    rhs: &dyn Rhs2,
    mut w: f64,
    mut phi: f64,
    mut dphi: f64,
    target: f64,
    step: f64,
    nodes: &mut Vec<(f64, f64, f64)>,
) -> Result<(), NumericError> {
    let dir = step.signum();
    if (target - w) * dir <= 0.0 {
        return Ok(());
    }
    loop {
        let remaining = (target - w) * dir;
        if remaining <= 1e-14 {
            break;
        }
        let h = step.abs().min(remaining) * dir;
        let (p1, d1) = rk4_step(rhs, w, phi, dphi, h)?;
        w += h;
        phi = p1;
        dphi = d1;
        if !phi.is_finite() || !dphi.is_finite() {
            return Err(NumericError::NonFinite);
        }
        nodes.push((w, phi, dphi));
    }
    Ok(())
}

fn rk4_step(
    rhs: &dyn Rhs2,
    w: f64,
    phi: f64,
    dphi: f64,
    h: f64,
) -> Result<(f64, f64), NumericError> {
    let f = |w: f64, p: f64, d: f64| -> Result<(f64, f64), NumericError> {
        Ok((d, rhs.eval(w, p, d)?))
    };
    let (k1p, k1d) = f(w, phi, dphi)?;
    let (k2p, k2d) = f(w + h / 2.0, phi + h / 2.0 * k1p, dphi + h / 2.0 * k1d)?;
    let (k3p, k3d) = f(w + h / 2.0, phi + h / 2.0 * k2p, dphi + h / 2.0 * k2d)?;
    let (k4p, k4d) = f(w + h, phi + h * k3p, dphi + h * k3d)?;
    Ok((
        phi + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        dphi + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
    ))
}

/// Integrate a family of first-order characteristic curves `dz/dy = K(y,z)`
/// from the given seeds across `y_span`. Curves hitting the blow-up bound
/// are truncated and flagged.
#[derive(Clone, Debug)]
pub struct CharCurve {
    pub seed: (f64, f64),
    pub points: Vec<(f64, f64)>,
    pub truncated: bool,
}

pub fn integrate_characteristics(
    k: &dyn Fn(f64, f64) -> Result<f64, NumericError>,
    seeds: &[(f64, f64)],
    y_span: (f64, f64),
    step: f64,
    blowup_bound: f64,
) -> Result<Vec<CharCurve>, NumericError> {
    let (a, b) = y_span;
    if a >= b || step <= 0.0 {
        return Err(NumericError::BadSpan { lo: a, hi: b });
    }
    let mut curves = Vec::with_capacity(seeds.len());
    for &(y0, z0) in seeds {
        if y0 < a - 1e-12 || y0 > b + 1e-12 {
            return Err(NumericError::OutOfDomain {
                value: y0,
                lo: a,
                hi: b,
            });
        }
        let mut points = vec![(y0, z0)];
        let mut truncated = false;
        for dir in [1.0f64, -1.0] {
            let target = if dir > 0.0 { b } else { a };
            let mut y = y0;
            let mut z = z0;
            'sweep: loop {
                let remaining = (target - y) * dir;
                if remaining <= 1e-14 {
                    break;
                }
                let h = step.min(remaining) * dir;
                // One fourth-order step for dz/dy = K.
                let k1 = k(y, z)?;
                let k2 = k(y + h / 2.0, z + h / 2.0 * k1)?;
                let k3 = k(y + h / 2.0, z + h / 2.0 * k2)?;
                let k4 = k(y + h, z + h * k3)?;
                z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                y += h;
                if !z.is_finite() || z.abs() > blowup_bound {
                    truncated = true;
                    break 'sweep;
                }
                points.push((y, z));
            }
        }
        points.sort_by(|p, q| p.0.total_cmp(&q.0));
        curves.push(CharCurve {
            seed: (y0, z0),
            points,
            truncated,
        });
    }
    Ok(curves)
}
