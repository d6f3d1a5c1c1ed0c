//! Desk-scale numerical backends: grids, the mixed-derivative stencil,
//! fixed-step integration, characteristic curves, and singularity guards.

pub mod compile;
pub mod ode;

use serde::Serialize;

pub use compile::Compiled;
pub use ode::{integrate_characteristics, integrate_second_order, CharCurve, DenseSolution};

use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericError {
    #[error("evaluation at a pole")]
    Pole,
    #[error("logarithm of a non-positive value")]
    LogDomain,
    #[error("non-finite value produced")]
    NonFinite,
    #[error("symbol '{0}' has no numeric value")]
    UnboundSymbol(String),
    #[error("symbolic preparation failed: {0}")]
    Symbolic(String),
    #[error("value {value} outside domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },
    #[error("invalid span [{lo}, {hi}]")]
    BadSpan { lo: f64, hi: f64 },
    #[error("grid too small: need at least 5 nodes per direction")]
    GridTooSmall,
    #[error("box touches a singularity of '{denominator}' near ({y}, {z})")]
    SingularBox { denominator: String, y: f64, z: f64 },
    #[error("level-set sampling failed: {0}")]
    LevelSet(String),
}

/// A rectangular box `[y0, y1] x [z0, z1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Box2D {
    pub y0: f64,
    pub y1: f64,
    pub z0: f64,
    pub z1: f64,
}

impl Box2D {
    pub fn new(y0: f64, y1: f64, z0: f64, z1: f64) -> Result<Self, NumericError> {
        if y0 >= y1 || z0 >= z1 {
            return Err(NumericError::BadSpan { lo: y0, hi: y1 });
        }
        Ok(Box2D { y0, y1, z0, z1 })
    }

    /// The default working box, away from the `y = 0`, `z = 0`, `y+z = 0`
    /// loci of the worked examples.
    pub fn default_box() -> Self {
        Box2D {
            y0: 1.0,
            y1: 2.0,
            z0: 1.0,
            z1: 2.0,
        }
    }

    pub fn grow(&self, margin: f64) -> Box2D {
        Box2D {
            y0: self.y0 - margin,
            y1: self.y1 + margin,
            z0: self.z0 - margin,
            z1: self.z1 + margin,
        }
    }
}

/// A uniform grid of samples, row-major over (y, z).
#[derive(Clone, Debug)]
pub struct Grid2D {
    pub y0: f64,
    pub z0: f64,
    pub h: f64,
    pub ny: usize,
    pub nz: usize,
    pub values: Vec<f64>,
}

impl Grid2D {
    pub fn from_fn(
        bx: &Box2D,
        h: f64,
        f: &dyn Fn(f64, f64) -> Result<f64, NumericError>,
    ) -> Result<Grid2D, NumericError> {
        let ny = ((bx.y1 - bx.y0) / h).round() as usize + 1;
        let nz = ((bx.z1 - bx.z0) / h).round() as usize + 1;
        if ny < 5 || nz < 5 {
            return Err(NumericError::GridTooSmall);
        }
        let mut values = Vec::with_capacity(ny * nz);
        for i in 0..ny {
            let y = bx.y0 + i as f64 * h;
            for j in 0..nz {
                let z = bx.z0 + j as f64 * h;
                let v = f(y, z)?;
                if !v.is_finite() {
                    return Err(NumericError::NonFinite);
                }
                values.push(v);
            }
        }
        Ok(Grid2D {
            y0: bx.y0,
            z0: bx.z0,
            h,
            ny,
            nz,
            values,
        })
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nz + j]
    }

    /// Plain-text export: one-line header `ny nz y0 z0 h`, then rows.
    pub fn write_text(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(
            out,
            "{} {} {} {} {}",
            self.ny, self.nz, self.y0, self.z0, self.h
        )?;
        for i in 0..self.ny {
            let row: Vec<String> = (0..self.nz)
                .map(|j| format!("{:e}", self.at(i, j)))
                .collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text(input: &str) -> Result<Grid2D, NumericError> {
        let mut lines = input.lines();
        let header = lines.next().ok_or(NumericError::GridTooSmall)?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 5 {
            return Err(NumericError::Symbolic("malformed grid header".into()));
        }
        let ny: usize = parts[0]
            .parse()
            .map_err(|_| NumericError::Symbolic("bad ny".into()))?;
        let nz: usize = parts[1]
            .parse()
            .map_err(|_| NumericError::Symbolic("bad nz".into()))?;
        let y0: f64 = parts[2]
            .parse()
            .map_err(|_| NumericError::Symbolic("bad y0".into()))?;
        let z0: f64 = parts[3]
            .parse()
            .map_err(|_| NumericError::Symbolic("bad z0".into()))?;
        let h: f64 = parts[4]
            .parse()
            .map_err(|_| NumericError::Symbolic("bad h".into()))?;
        if ny < 5 || nz < 5 || h <= 0.0 {
            return Err(NumericError::GridTooSmall);
        }
        let mut values = Vec::with_capacity(ny * nz);
        for line in lines {
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| NumericError::Symbolic("bad value".into()))?;
                if !v.is_finite() {
                    return Err(NumericError::NonFinite);
                }
                values.push(v);
            }
        }
        if values.len() != ny * nz {
            return Err(NumericError::Symbolic(format!(
                "expected {} values, found {}",
                ny * nz,
                values.len()
            )));
        }
        Ok(Grid2D {
            y0,
            z0,
            h,
            ny,
            nz,
            values,
        })
    }
}

/// Residual statistics over the interior nodes of a grid check.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ResidualStats {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub nodes: usize,
    /// Measured convergence slope across two resolutions, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

/// Mixed-derivative residual of `u` against `f(y, z, u)` over the box:
/// the 4-point cross stencil
/// `[u(y+h,z+h) - u(y+h,z-h) - u(y-h,z+h) + u(y-h,z-h)] / (4 h^2)`
/// minus `f`, evaluated at every interior node of the `h`-grid. `u` must be
/// evaluable on the box grown by one ghost margin `h`.
pub fn fd_mixed_residual(
    u: &dyn Fn(f64, f64) -> Result<f64, NumericError>,
    f: &dyn Fn(f64, f64, f64) -> Result<f64, NumericError>,
    bx: &Box2D,
    h: f64,
) -> Result<ResidualStats, NumericError> {
    let ny = ((bx.y1 - bx.y0) / h).round() as usize + 1;
    let nz = ((bx.z1 - bx.z0) / h).round() as usize + 1;
    if ny < 5 || nz < 5 {
        return Err(NumericError::GridTooSmall);
    }
    let mut max_abs = 0.0f64;
    let mut sum_abs = 0.0f64;
    let mut count = 0usize;
    for i in 0..ny {
        let y = bx.y0 + i as f64 * h;
        for j in 0..nz {
            let z = bx.z0 + j as f64 * h;
            let stencil = (u(y + h, z + h)? - u(y + h, z - h)? - u(y - h, z + h)?
                + u(y - h, z - h)?)
                / (4.0 * h * h);
            let rhs = f(y, z, u(y, z)?)?;
            let r = stencil - rhs;
            if !r.is_finite() {
                return Err(NumericError::NonFinite);
            }
            max_abs = max_abs.max(r.abs());
            sum_abs += r.abs();
            count += 1;
        }
    }
    Ok(ResidualStats {
        max_abs,
        mean_abs: sum_abs / count as f64,
        nodes: count,
        slope: None,
    })
}

/// Mixed-derivative residual of a sampled grid against `f(y, z, u)`: the
/// same cross stencil over stored node values, restricted to the interior
/// ring where the stencil fits.
pub fn fd_mixed_residual_grid(
    u: &Grid2D,
    f: &dyn Fn(f64, f64, f64) -> Result<f64, NumericError>,
) -> Result<ResidualStats, NumericError> {
    if u.ny < 5 || u.nz < 5 {
        return Err(NumericError::GridTooSmall);
    }
    let h = u.h;
    let mut max_abs = 0.0f64;
    let mut sum_abs = 0.0f64;
    let mut count = 0usize;
    for i in 1..u.ny - 1 {
        let y = u.y0 + i as f64 * h;
        for j in 1..u.nz - 1 {
            let z = u.z0 + j as f64 * h;
            let stencil = (u.at(i + 1, j + 1) - u.at(i + 1, j - 1) - u.at(i - 1, j + 1)
                + u.at(i - 1, j - 1))
                / (4.0 * h * h);
            let r = stencil - f(y, z, u.at(i, j))?;
            if !r.is_finite() {
                return Err(NumericError::NonFinite);
            }
            max_abs = max_abs.max(r.abs());
            sum_abs += r.abs();
            count += 1;
        }
    }
    Ok(ResidualStats {
        max_abs,
        mean_abs: sum_abs / count as f64,
        nodes: count,
        slope: None,
    })
}

/// Order-of-accuracy slope between residuals at `h` and `h/2`:
/// `log2(r_h / r_half)`; 2.0 for a second-order stencil.
pub fn convergence_slope(r_h: f64, r_half: f64) -> f64 {
    (r_h / r_half).log2()
}

/// Collect the denominator loci of an expression: the denominator of its
/// canonical form plus denominators nested in exp/log arguments and
/// explicit function arguments.
pub fn singular_denominators(e: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    if let Ok(r) = crate::expr::canon::canon(e) {
        collect_dens(&r, &mut out);
    }
    out
}

fn collect_dens(r: &crate::expr::RatFunc, out: &mut Vec<Expr>) {
    if !r.den().is_one() {
        let d =
            crate::expr::canon::ratfunc_to_expr(&crate::expr::RatFunc::from_poly(r.den().clone()));
        if !out.contains(&d) {
            out.push(d);
        }
    }
    for p in [r.num(), r.den()] {
        for m in p.terms.keys() {
            if let Some(g) = &m.exparg {
                collect_dens(g, out);
            }
            for a in m.powers.keys() {
                match a {
                    crate::expr::atom::Atom::Log(g) => collect_dens(g, out),
                    crate::expr::atom::Atom::Func(fa) => {
                        if let Some(args) = &fa.args {
                            for arg in args {
                                collect_dens(arg, out);
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
    }
}

/// Validate that none of the expressions' denominators vanish on (or sign
/// change across) the closed box, by dense sampling.
pub fn validate_box(exprs: &[&Expr], bx: &Box2D) -> Result<(), NumericError> {
    const N: usize = 64;
    const FLOOR: f64 = 1e-9;
    for e in exprs {
        for den in singular_denominators(e) {
            let c = Compiled::new(&den, &["y", "z", "u"])?;
            let mut sign = 0.0f64;
            for i in 0..=N {
                let y = bx.y0 + (bx.y1 - bx.y0) * i as f64 / N as f64;
                for j in 0..=N {
                    let z = bx.z0 + (bx.z1 - bx.z0) * j as f64 / N as f64;
                    // u enters denominators only through the operator
                    // coefficients, which the workbench keeps rational in
                    // (y,z); sample a few u values anyway.
                    for uu in [1.0, 1.5, 2.0] {
                        let v = c.eval(&[y, z, uu])?;
                        if v.abs() < FLOOR || (sign != 0.0 && v.signum() != sign) {
                            return Err(NumericError::SingularBox {
                                denominator: den.to_dsl(),
                                y,
                                z,
                            });
                        }
                        sign = v.signum();
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn okf(v: f64) -> Result<f64, NumericError> {
        Ok(v)
    }

    #[test]
    fn stencil_exact_on_bilinear() {
        // u = y z solves u_yz = 1: residual 0 against f = 1, residual 1
        // against f = 0.
        let u = |y: f64, z: f64| okf(y * z);
        let bx = Box2D::default_box();
        let r = fd_mixed_residual(&u, &|_, _, _| okf(1.0), &bx, 0.05).unwrap();
        assert!(r.max_abs < 1e-11, "{r:?}");
        let r = fd_mixed_residual(&u, &|_, _, _| okf(0.0), &bx, 0.05).unwrap();
        assert!((r.max_abs - 1.0).abs() < 1e-11);
    }

    #[test]
    fn stencil_exact_on_linear_and_quadratic() {
        let bx = Box2D::default_box();
        // u = 3y + 5z has u_yz = 0.
        let r = fd_mixed_residual(
            &|y, z| okf(3.0 * y + 5.0 * z),
            &|_, _, _| okf(0.0),
            &bx,
            0.01,
        )
        .unwrap();
        assert!(r.max_abs < 1e-9);
        // u = (y-z)^2 has u_yz = -2.
        let r = fd_mixed_residual(
            &|y, z| okf((y - z) * (y - z)),
            &|_, _, _| okf(-2.0),
            &bx,
            0.01,
        )
        .unwrap();
        assert!(r.max_abs < 1e-9, "{r:?}");
    }

    #[test]
    fn stencil_second_order_on_exponential() {
        // u = exp(y+z): u_yz = exp(y+z); residual decays as h^2.
        let u = |y: f64, z: f64| okf((y + z).exp());
        let f = |y: f64, z: f64, _u: f64| okf((y + z).exp());
        let bx = Box2D::default_box();
        let r1 = fd_mixed_residual(&u, &f, &bx, 2e-3).unwrap();
        let r2 = fd_mixed_residual(&u, &f, &bx, 1e-3).unwrap();
        let slope = convergence_slope(r1.max_abs, r2.max_abs);
        assert!((slope - 2.0).abs() <= 0.1, "slope {slope}");
    }

    #[test]
    fn grid_text_round_trip() {
        let bx = Box2D::default_box();
        let g = Grid2D::from_fn(&bx, 0.25, &|y, z| okf(y * z)).unwrap();
        let mut buf = Vec::new();
        g.write_text(&mut buf).unwrap();
        let g2 = Grid2D::read_text(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(g.ny, g2.ny);
        assert_eq!(g.nz, g2.nz);
        assert_eq!(g.values, g2.values);
    }

    #[test]
    fn grid_stencil_matches_callable_stencil() {
        let bx = Box2D::default_box();
        let u = |y: f64, z: f64| okf((y - z) * (y - z) + y * z);
        // u_yz = -2 + 1 = -1, stencil exact on quadratics.
        let g = Grid2D::from_fn(&bx.grow(0.05), 0.05, &u).unwrap();
        let r = fd_mixed_residual_grid(&g, &|_, _, _| okf(-1.0)).unwrap();
        assert!(r.max_abs < 1e-10, "{r:?}");
        assert!(r.nodes > 0);
    }

    #[test]
    fn grid_too_small_rejected() {
        let g = Grid2D {
            y0: 0.0,
            z0: 0.0,
            h: 0.5,
            ny: 3,
            nz: 3,
            values: vec![0.0; 9],
        };
        assert!(matches!(
            fd_mixed_residual_grid(&g, &|_, _, _| okf(0.0)),
            Err(NumericError::GridTooSmall)
        ));
    }

    #[test]
    fn box_validation_flags_pole() {
        let decls = crate::expr::DeclTable::standard();
        let e = crate::expr::parse("1/(y-z)", &decls).unwrap();
        let bad = Box2D::default_box();
        assert!(validate_box(&[&e], &bad).is_err());
        let e2 = crate::expr::parse("1/(y+z)", &decls).unwrap();
        assert!(validate_box(&[&e2], &bad).is_ok());
    }
}
