//! Spinor covariant derivatives, the curved Dirac operator and the
//! d'Alembert factorization check.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::CMat;

use super::frame::{christoffel_at, frame_rep, spin_connection_at, vierbein_at, DEFAULT_STEP};
use super::lattice::Field;
use super::metric::ChartMetric;

pub type Spinor = DVector<Complex64>;

/// Second-order derivative of uniformly spaced samples (one-sided at the ends).
fn sample_derivative<T>(samples: &[T], k: usize, dt: f64, sub: impl Fn(&T, &T) -> T, lin: impl Fn(&[(f64, &T)]) -> T) -> T {
    let n = samples.len();
    if k == 0 {
        lin(&[(-1.5 / dt, &samples[0]), (2.0 / dt, &samples[1]), (-0.5 / dt, &samples[2])])
    } else if k == n - 1 {
        lin(&[(1.5 / dt, &samples[n - 1]), (-2.0 / dt, &samples[n - 2]), (0.5 / dt, &samples[n - 3])])
    } else {
        let d = sub(&samples[k + 1], &samples[k - 1]);
        lin(&[(0.5 / dt, &d)])
    }
}

/// `∇_t ψ = dψ/dt + Ω_μ(x(t)) ẋ^μ ψ` at every sample of a curve.
pub fn covariant_derivative_spinor(psi: &[Spinor], curve: &[Vec<f64>], dt: f64, metric: &dyn ChartMetric) -> Result<Vec<Spinor>> {
    if psi.len() < 3 || curve.len() < 3 {
        return Err(Error::TooFewSamples { need: 3, got: psi.len().min(curve.len()) });
    }
    if psi.len() != curve.len() {
        return Err(Error::DimensionMismatch(format!("{} spinor samples vs {} curve samples", psi.len(), curve.len())));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::NonUniformSamples);
    }
    let n = metric.dim();
    let mut out = Vec::with_capacity(psi.len());
    for k in 0..psi.len() {
        let dpsi = sample_derivative(psi, k, dt, |a, b| a - b, |terms| {
            terms.iter().fold(Spinor::zeros(psi[0].len()), |acc, (w, v)| acc + v.map(|z| z * *w))
        });
        let xdot = sample_derivative(curve, k, dt, |a, b| a.iter().zip(b).map(|(p, q)| p - q).collect(), |terms| {
            let mut acc = vec![0.0; n];
            for (w, v) in terms {
                for (a, c) in acc.iter_mut().zip(v.iter()) {
                    *a += w * c;
                }
            }
            acc
        });
        let sc = spin_connection_at(metric, &curve[k])?;
        let mut conn = CMat::zeros(psi[k].len(), psi[k].len());
        for mu in 0..n {
            conn += sc.omega_matrices[mu].scale(xdot[mu]);
        }
        out.push(dpsi + conn * &psi[k]);
    }
    Ok(out)
}

/// `D ψ = e_a^μ γ^a (∂_μ ψ + Ω_μ ψ)` at lattice index `idx`, with central differences.
pub fn curved_dirac_apply(field: &Field, metric: &dyn ChartMetric, idx: &[usize]) -> Result<Spinor> {
    let grid = &field.grid;
    grid.require_ghosts(idx)?;
    let n = metric.dim();
    if grid.ndim() != n {
        return Err(Error::DimensionMismatch(format!("lattice has {} axes, metric has {n}", grid.ndim())));
    }
    let rep = frame_rep(metric)?;
    let d = rep.spinor_dim();
    if field.components != d {
        return Err(Error::DimensionMismatch(format!("field has {} components, spinors have {d}", field.components)));
    }
    let x = grid.point(idx);
    let sc = spin_connection_at(metric, &x)?;
    let inv = sc.vierbein.inverse();
    let up = rep.raised();
    let here = Spinor::from_column_slice(field.at(grid.flat(idx)));
    let mut out = Spinor::zeros(d);
    for mu in 0..n {
        let plus = Spinor::from_column_slice(field.at(grid.shifted(idx, mu, 1)));
        let minus = Spinor::from_column_slice(field.at(grid.shifted(idx, mu, -1)));
        let cov = (plus - minus).map(|z| z / (2.0 * grid.spacing[mu])) + &sc.omega_matrices[mu] * &here;
        let mut gamma_mu = CMat::zeros(d, d);
        for a in 0..n {
            gamma_mu += up[a].scale(inv[(mu, a)]);
        }
        out += gamma_mu * cov;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DalembertReport {
    /// Largest `|Tr(γ^μγ^ν D_μD_νφ)/d - □φ|` over the interior.
    pub max_residual: f64,
    pub points: usize,
}

/// Compares the Clifford-squared second covariant derivative of a scalar with
/// the flux-form Laplace–Beltrami stencil at every interior lattice point.
pub fn dalembert_factorization_check(phi: &Field, metric: &dyn ChartMetric) -> Result<DalembertReport> {
    let grid = &phi.grid;
    let n = metric.dim();
    if phi.components != 1 {
        return Err(Error::DimensionMismatch(format!("scalar field expected, got {} components", phi.components)));
    }
    if grid.ndim() != n {
        return Err(Error::DimensionMismatch(format!("lattice has {} axes, metric has {n}", grid.ndim())));
    }
    let rep = frame_rep(metric)?;
    let up = rep.raised();
    let d = rep.spinor_dim() as f64;
    let h = &grid.spacing;
    let val = |k: usize| phi.data[k];

    let flux_weight = |x: &[f64]| -> Result<(f64, nalgebra::DMatrix<f64>)> {
        let g = metric.g(x);
        let det = g.determinant();
        let gi = g.try_inverse().ok_or(Error::Singular { cond: f64::INFINITY })?;
        Ok((det.abs().sqrt(), gi))
    };
    // Central first derivative ∂_ν φ at an arbitrary lattice index.
    let grad = |idx: &[usize], nu: usize| (val(grid.shifted(idx, nu, 1)) - val(grid.shifted(idx, nu, -1))) / (2.0 * h[nu]);

    let interior = grid.interior();
    let residuals: Vec<f64> = interior
        .par_iter()
        .map(|idx| -> Result<f64> {
            let x = grid.point(idx);
            let k = grid.flat(idx);
            let here = val(k);

            // Left side: γ^μγ^ν (∂_μ∂_ν φ - Γ^α_μν ∂_α φ), trace-projected.
            let gam = christoffel_at(metric, &x, DEFAULT_STEP)?;
            let inv = vierbein_at(metric, &x)?.inverse();
            let coord: Vec<CMat> = (0..n)
                .map(|mu| (0..n).fold(CMat::zeros(up[0].nrows(), up[0].nrows()), |acc, a| acc + up[a].scale(inv[(mu, a)])))
                .collect();
            let mut op = CMat::zeros(coord[0].nrows(), coord[0].nrows());
            for mu in 0..n {
                for nu in 0..n {
                    let hess = if mu == nu {
                        (val(grid.shifted(idx, mu, 1)) - here * 2.0 + val(grid.shifted(idx, mu, -1))) / (h[mu] * h[mu])
                    } else {
                        let mut j = idx.clone();
                        let mut corner = |sm: isize, sn: isize| {
                            j.clone_from(idx);
                            j[mu] = (j[mu] as isize + sm) as usize;
                            j[nu] = (j[nu] as isize + sn) as usize;
                            val(grid.flat(&j))
                        };
                        (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1)) / (4.0 * h[mu] * h[nu])
                    };
                    let mut dd = hess;
                    for alpha in 0..n {
                        dd -= grad(idx, alpha) * gam.get(alpha, mu, nu);
                    }
                    op += (&coord[mu] * &coord[nu]).map(|z| z * dd);
                }
            }
            let lhs = op.trace() / d;

            // Right side: (1/√|g|) ∂_μ(√|g| g^μν ∂_ν φ).
            let (root, _) = flux_weight(&x)?;
            let mut div = Complex64::new(0.0, 0.0);
            for mu in 0..n {
                for nu in 0..n {
                    if mu == nu {
                        let mut xp = x.clone();
                        let mut xm = x.clone();
                        xp[mu] += 0.5 * h[mu];
                        xm[mu] -= 0.5 * h[mu];
                        let (rp, gp) = flux_weight(&xp)?;
                        let (rm, gm) = flux_weight(&xm)?;
                        let fp = (val(grid.shifted(idx, mu, 1)) - here) * (rp * gp[(mu, mu)]);
                        let fm = (here - val(grid.shifted(idx, mu, -1))) * (rm * gm[(mu, mu)]);
                        div += (fp - fm) / (h[mu] * h[mu]);
                    } else {
                        let side = |s: isize| -> Result<Complex64> {
                            let mut j = idx.clone();
                            j[mu] = (j[mu] as isize + s) as usize;
                            let (r, gi) = flux_weight(&grid.point(&j))?;
                            Ok(grad(&j, nu) * (r * gi[(mu, nu)]))
                        };
                        div += (side(1)? - side(-1)?) / (2.0 * h[mu]);
                    }
                }
            }
            let rhs = div / root;
            Ok((lhs - rhs).norm())
        })
        .collect::<Result<_>>()?;
    Ok(DalembertReport { max_residual: residuals.iter().cloned().fold(0.0, f64::max), points: residuals.len() })
}

/// `Σ_μ e_a^μ γ^a` for each coordinate direction.
pub fn coordinate_gammas(metric: &dyn ChartMetric, x: &[f64]) -> Result<Vec<CMat>> {
    let rep = frame_rep(metric)?;
    let up = rep.raised();
    let inv = vierbein_at(metric, x)?.inverse();
    let d = rep.spinor_dim();
    Ok((0..metric.dim())
        .map(|mu| (0..metric.dim()).fold(CMat::zeros(d, d), |acc, a| acc + up[a].scale(inv[(mu, a)])))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::lattice::Grid;
    use super::super::metric::{FnMetric, Frw1p1, Minkowski, PolarFlat2d};
    use super::*;
    use crate::gamma::{spin_transform, Convention};
    use crate::linalg::{c, RMat, I};

    fn flat2(conv: Convention) -> Minkowski {
        Minkowski { n: 2, convention: conv }
    }

    #[test]
    fn covariant_derivative_flat_cases() {
        let m = flat2(Convention::MostlyPlus);
        let psi0 = Spinor::from_vec(vec![c(1.0, 0.5), c(-0.3, 2.0)]);
        let dt = 0.1;
        let curve: Vec<Vec<f64>> = (0..6).map(|k| vec![k as f64 * dt, 0.3 * k as f64 * dt]).collect();
        let constant = vec![psi0.clone(); 6];
        let d = covariant_derivative_spinor(&constant, &curve, dt, &m).unwrap();
        assert!(d.iter().all(|v| v.norm() == 0.0));
        let linear: Vec<Spinor> = (0..6).map(|k| psi0.scale(k as f64 * dt)).collect();
        let d = covariant_derivative_spinor(&linear, &curve, dt, &m).unwrap();
        assert!(d.iter().all(|v| (v - &psi0).norm() < 1e-12));
        assert!(matches!(
            covariant_derivative_spinor(&constant[..2], &curve[..2], dt, &m),
            Err(Error::TooFewSamples { need: 3, got: 2 })
        ));
    }

    #[test]
    fn parallel_transport_has_zero_covariant_derivative() {
        // Oracle: RK4 for dψ/dt = -Ω(x)ẋ ψ with steps far finer than the sampling.
        let metric = PolarFlat2d;
        let curve_at = |t: f64| vec![1.5 + 0.3 * t, 0.2 + 1.1 * t];
        let xdot = [0.3, 1.1];
        let rhs = |t: f64, psi: &Spinor| -> Spinor {
            let sc = spin_connection_at(&metric, &curve_at(t)).unwrap();
            let mut m = CMat::zeros(2, 2);
            for mu in 0..2 {
                m += sc.omega_matrices[mu].scale(xdot[mu]);
            }
            -(m * psi)
        };
        let dt = 0.002;
        let sub = 10;
        let hs = dt / sub as f64;
        let mut psi = Spinor::from_vec(vec![c(0.6, 0.1), c(-0.2, 0.7)]);
        let mut samples = vec![psi.clone()];
        let mut t = 0.0;
        for _ in 0..10 {
            for _ in 0..sub {
                let k1 = rhs(t, &psi);
                let k2 = rhs(t + hs / 2.0, &(&psi + k1.scale(hs / 2.0)));
                let k3 = rhs(t + hs / 2.0, &(&psi + k2.scale(hs / 2.0)));
                let k4 = rhs(t + hs, &(&psi + k3.scale(hs)));
                psi += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4).scale(hs / 6.0);
                t += hs;
            }
            samples.push(psi.clone());
        }
        let curve: Vec<Vec<f64>> = (0..samples.len()).map(|k| curve_at(k as f64 * dt)).collect();
        let d = covariant_derivative_spinor(&samples, &curve, dt, &metric).unwrap();
        // Interior samples use the central stencil; the ends are one-sided.
        for v in &d[1..d.len() - 1] {
            assert!(v.norm() < 1e-6, "{}", v.norm());
        }
    }

    fn plane_wave_grid(n: usize, h: f64) -> Grid {
        Grid::new(vec![n, n], vec![h, h], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn flat_dirac_on_plane_wave() {
        let metric = flat2(Convention::MostlyPlus);
        let rep = frame_rep(&metric).unwrap();
        let up = rep.raised();
        let k = [0.7, -1.3];
        let u = [c(1.0, 0.0), c(0.2, -0.4)];
        let mut errs = Vec::new();
        for h in [0.02, 0.01] {
            let grid = plane_wave_grid(9, h);
            let field = Field::from_fn(grid, 2, |x| {
                let ph = (I * (k[0] * x[0] + k[1] * x[1])).exp();
                vec![u[0] * ph, u[1] * ph]
            });
            let idx = [4, 4];
            let out = curved_dirac_apply(&field, &metric, &idx).unwrap();
            let here = Spinor::from_column_slice(field.at(field.grid.flat(&idx)));
            let exact = (up[0].scale(k[0]) + up[1].scale(k[1])) * I * here;
            errs.push((out - exact).norm());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(errs[0] < 1e-3 && (order - 2.0).abs() < 0.1, "{errs:?}");

        let constant = Field::from_fn(plane_wave_grid(6, 0.1), 2, |_| vec![c(1.0, 2.0), c(3.0, -1.0)]);
        assert_eq!(curved_dirac_apply(&constant, &metric, &[2, 3]).unwrap().norm(), 0.0);
        assert!(matches!(curved_dirac_apply(&constant, &metric, &[1, 3]), Err(Error::MissingGhost { .. })));
    }

    #[test]
    fn polar_dirac_matches_cartesian() {
        // ψ_polar(r,θ) = S(θ) ψ_cart(r cosθ, r sinθ) and D_polar ψ_polar = S(θ) D_cart ψ_cart,
        // with S the spinor rotation carrying the Cartesian frame to (e_r, e_θ).
        let cart = FnMetric::new(vec![1.0, 1.0], |_| RMat::identity(2, 2));
        let rep = frame_rep(&cart).unwrap();
        let rot = |th: f64| spin_transform(&rep, 0, 1, th).unwrap();
        let psi_cart = |x: f64, y: f64| Spinor::from_vec(vec![c(x.sin() + y * y, 0.3 * x), c(y.cos(), x * y)]);
        let (r0, th0) = (1.3, 0.6);
        let mut errs = Vec::new();
        for h in [0.01, 0.005] {
            let grid = Grid::new(vec![5, 5], vec![h, h], vec![r0 - 2.0 * h, th0 - 2.0 * h]).unwrap();
            let polar = Field::from_fn(grid, 2, |p| {
                let v = rot(p[1]) * psi_cart(p[0] * p[1].cos(), p[0] * p[1].sin());
                v.iter().cloned().collect()
            });
            let lhs = curved_dirac_apply(&polar, &PolarFlat2d, &[2, 2]).unwrap();

            let (x0, y0) = (r0 * th0.cos(), r0 * th0.sin());
            let cgrid = Grid::new(vec![5, 5], vec![h, h], vec![x0 - 2.0 * h, y0 - 2.0 * h]).unwrap();
            let cfield = Field::from_fn(cgrid, 2, |p| psi_cart(p[0], p[1]).iter().cloned().collect());
            let rhs = rot(th0) * curved_dirac_apply(&cfield, &cart, &[2, 2]).unwrap();
            errs.push((lhs - rhs).norm());
        }
        assert!(errs[0] < 1e-3, "{errs:?}");
        assert!((errs[0] / errs[1]).log2() > 1.8, "{errs:?}");
    }

    #[test]
    fn dalembert_flat_quadratic_is_exact() {
        let metric = flat2(Convention::MostlyPlus);
        let grid = Grid::cube(12, &[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let phi = Field::from_fn(grid, 1, |x| vec![c(x[0] * x[0] - 2.0 * x[0] * x[1] + 0.5 * x[1] * x[1] + x[1], 0.0)]);
        let rep = dalembert_factorization_check(&phi, &metric).unwrap();
        assert_eq!(rep.points, 64);
        assert!(rep.max_residual < 1e-10, "{}", rep.max_residual);
    }

    #[test]
    fn dalembert_flat_plane_wave_symbols_agree() {
        let metric = flat2(Convention::MostlyPlus);
        let k = [0.9, 1.4];
        let grid = Grid::cube(20, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let phi = Field::from_fn(grid, 1, |x| vec![(I * (k[0] * x[0] + k[1] * x[1])).exp()]);
        let rep = dalembert_factorization_check(&phi, &metric).unwrap();
        assert!(rep.max_residual < 1e-12, "{}", rep.max_residual);
    }

    pub(crate) fn frw_residual(n: usize) -> f64 {
        let metric = Frw1p1 { eps: 0.5, accel: 1.0 };
        let grid = Grid::cube(n + 1, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let phi = Field::from_fn(grid, 1, |x| vec![c((1.3 * x[0]).sin() * (2.0 * x[1]).cos() + 0.4 * x[0] * x[1] * x[1], 0.0)]);
        dalembert_factorization_check(&phi, &metric).unwrap().max_residual
    }

    #[test]
    fn dalembert_frw_converges_second_order() {
        let r: Vec<f64> = [32, 64, 128].iter().map(|&n| frw_residual(n)).collect();
        let o1 = (r[0] / r[1]).log2();
        let o2 = (r[1] / r[2]).log2();
        assert!(o1 >= 1.9 && o2 >= 1.9, "{r:?} {o1} {o2}");
    }
}
