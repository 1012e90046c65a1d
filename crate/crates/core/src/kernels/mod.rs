//! Covariance functions as composable expression trees.
//!
//! Leaves are the stationary kernels `const`, `rbf`, `matern`, `rq` and the
//! index-identity `white` noise term; inner nodes are sums and products.
//! Every leaf parameter is a [`HyperParam`] optimized in log space, and
//! [`KernelExpr::value_and_grad`] returns derivatives with respect to the
//! natural log of each free parameter in depth-first order.

mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{squared_distance, Features};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use parse::parse_kernel;

/// A positive hyperparameter with box bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParam {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl HyperParam {
    pub fn new(value: f64, lower: f64, upper: f64) -> Result<Self> {
        let ok = value.is_finite() && lower.is_finite() && upper.is_finite();
        if !ok || !(0.0 < lower && lower <= value && value <= upper) {
            return Err(Error::InvalidParameter(format!(
                "hyperparameter {value} outside bounds [{lower}, {upper}] or not positive"
            )));
        }
        Ok(Self { value, lower, upper })
    }

    /// Bounds widened so that they contain `value`.
    pub fn covering(value: f64, (lower, upper): (f64, f64)) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hyperparameter must be positive, got {value}"
            )));
        }
        Self::new(value, lower.min(value), upper.max(value))
    }

    pub fn log_value(&self) -> f64 {
        self.value.ln()
    }

    pub fn log_bounds(&self) -> (f64, f64) {
        (self.lower.ln(), self.upper.ln())
    }
}

/// Smoothness of a Matérn kernel; only the closed-form half-integer cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl MaternNu {
    pub fn from_f64(nu: f64) -> Result<Self> {
        match nu {
            v if v == 0.5 => Ok(MaternNu::Half),
            v if v == 1.5 => Ok(MaternNu::ThreeHalves),
            v if v == 2.5 => Ok(MaternNu::FiveHalves),
            other => Err(Error::InvalidParameter(format!(
                "matern nu must be 0.5, 1.5 or 2.5, got {other}"
            ))),
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            MaternNu::Half => 0.5,
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
        }
    }
}

/// Default search boxes for each hyperparameter kind, in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelBounds {
    pub constant: (f64, f64),
    pub length_scale: (f64, f64),
    pub noise: (f64, f64),
    pub alpha: (f64, f64),
}

impl Default for KernelBounds {
    fn default() -> Self {
        Self {
            constant: (1e-3, 1e3),
            length_scale: (1e-2, 1e2),
            noise: (1e-6, 1e2),
            alpha: (1e-2, 1e2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelExpr {
    Constant(HyperParam),
    Rbf {
        length_scale: HyperParam,
    },
    Matern {
        length_scale: HyperParam,
        nu: MaternNu,
    },
    RationalQuadratic {
        length_scale: HyperParam,
        alpha: HyperParam,
    },
    WhiteNoise(HyperParam),
    Sum(Box<KernelExpr>, Box<KernelExpr>),
    Product(Box<KernelExpr>, Box<KernelExpr>),
}

impl std::ops::Add for KernelExpr {
    type Output = KernelExpr;

    fn add(self, rhs: KernelExpr) -> KernelExpr {
        KernelExpr::Sum(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for KernelExpr {
    type Output = KernelExpr;

    fn mul(self, rhs: KernelExpr) -> KernelExpr {
        KernelExpr::Product(Box::new(self), Box::new(rhs))
    }
}

impl KernelExpr {
    pub fn constant(c: f64) -> Result<Self> {
        Ok(KernelExpr::Constant(HyperParam::covering(
            c,
            KernelBounds::default().constant,
        )?))
    }

    pub fn rbf(length_scale: f64) -> Result<Self> {
        Ok(KernelExpr::Rbf {
            length_scale: HyperParam::covering(length_scale, KernelBounds::default().length_scale)?,
        })
    }

    pub fn matern(length_scale: f64, nu: f64) -> Result<Self> {
        Ok(KernelExpr::Matern {
            length_scale: HyperParam::covering(length_scale, KernelBounds::default().length_scale)?,
            nu: MaternNu::from_f64(nu)?,
        })
    }

    pub fn rational_quadratic(length_scale: f64, alpha: f64) -> Result<Self> {
        let b = KernelBounds::default();
        Ok(KernelExpr::RationalQuadratic {
            length_scale: HyperParam::covering(length_scale, b.length_scale)?,
            alpha: HyperParam::covering(alpha, b.alpha)?,
        })
    }

    pub fn white(noise: f64) -> Result<Self> {
        Ok(KernelExpr::WhiteNoise(HyperParam::covering(
            noise,
            KernelBounds::default().noise,
        )?))
    }

    /// Number of free hyperparameters.
    pub fn n_params(&self) -> usize {
        match self {
            KernelExpr::Constant(_) | KernelExpr::Rbf { .. } | KernelExpr::Matern { .. } => 1,
            KernelExpr::WhiteNoise(_) => 1,
            KernelExpr::RationalQuadratic { .. } => 2,
            KernelExpr::Sum(a, b) | KernelExpr::Product(a, b) => a.n_params() + b.n_params(),
        }
    }

    /// Hyperparameters in depth-first order.
    pub fn hyperparams(&self) -> Vec<HyperParam> {
        let mut out = Vec::with_capacity(self.n_params());
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut Vec<HyperParam>) {
        match self {
            KernelExpr::Constant(p) | KernelExpr::WhiteNoise(p) => out.push(*p),
            KernelExpr::Rbf { length_scale } | KernelExpr::Matern { length_scale, .. } => out.push(*length_scale),
            KernelExpr::RationalQuadratic { length_scale, alpha } => {
                out.push(*length_scale);
                out.push(*alpha);
            }
            KernelExpr::Sum(a, b) | KernelExpr::Product(a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
        }
    }

    pub fn log_params(&self) -> Vec<f64> {
        self.hyperparams().iter().map(HyperParam::log_value).collect()
    }

    pub fn log_bounds(&self) -> Vec<(f64, f64)> {
        self.hyperparams().iter().map(HyperParam::log_bounds).collect()
    }

    /// Copy with hyperparameters set from log values (clamped into bounds).
    pub fn with_log_params(&self, theta: &[f64]) -> Result<KernelExpr> {
        if theta.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: theta.len(),
            });
        }
        let mut out = self.clone();
        let mut it = theta.iter();
        out.assign_params(&mut it);
        Ok(out)
    }

    fn assign_params<'a>(&mut self, it: &mut impl Iterator<Item = &'a f64>) {
        fn set<'a>(p: &mut HyperParam, it: &mut impl Iterator<Item = &'a f64>) {
            let v = it.next().expect("parameter count checked").exp();
            p.value = v.clamp(p.lower, p.upper);
        }
        match self {
            KernelExpr::Constant(p) | KernelExpr::WhiteNoise(p) => set(p, it),
            KernelExpr::Rbf { length_scale } | KernelExpr::Matern { length_scale, .. } => set(length_scale, it),
            KernelExpr::RationalQuadratic { length_scale, alpha } => {
                set(length_scale, it);
                set(alpha, it);
            }
            KernelExpr::Sum(a, b) | KernelExpr::Product(a, b) => {
                a.assign_params(it);
                b.assign_params(it);
            }
        }
    }

    /// Whether the expression contains a white-noise leaf.
    pub fn has_white_noise(&self) -> bool {
        match self {
            KernelExpr::WhiteNoise(_) => true,
            KernelExpr::Sum(a, b) | KernelExpr::Product(a, b) => a.has_white_noise() || b.has_white_noise(),
            _ => false,
        }
    }

    /// Kernel value between `x` and `y`; `same_instance` marks the two as the
    /// same sample, which is the only case white noise contributes.
    pub fn eval(&self, x: &[f64], y: &[f64], same_instance: bool) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(self.value(squared_distance(x, y), same_instance))
    }

    /// Value as a function of squared distance.
    pub fn value(&self, d2: f64, same: bool) -> f64 {
        match self {
            KernelExpr::Constant(c) => c.value,
            KernelExpr::Rbf { length_scale } => {
                let l = length_scale.value;
                (-0.5 * d2 / (l * l)).exp()
            }
            KernelExpr::Matern { length_scale, nu } => matern(d2.sqrt() / length_scale.value, *nu).0,
            KernelExpr::RationalQuadratic { length_scale, alpha } => {
                let (l, a) = (length_scale.value, alpha.value);
                (1.0 + d2 / (2.0 * a * l * l)).powf(-a)
            }
            KernelExpr::WhiteNoise(s) => {
                if same {
                    s.value
                } else {
                    0.0
                }
            }
            KernelExpr::Sum(a, b) => a.value(d2, same) + b.value(d2, same),
            KernelExpr::Product(a, b) => a.value(d2, same) * b.value(d2, same),
        }
    }

    /// Value plus `∂k/∂log θ` for every free parameter, written into `grad`.
    pub fn value_and_grad(&self, d2: f64, same: bool, grad: &mut [f64]) -> f64 {
        debug_assert_eq!(grad.len(), self.n_params());
        match self {
            KernelExpr::Constant(c) => {
                grad[0] = c.value;
                c.value
            }
            KernelExpr::Rbf { length_scale } => {
                let l = length_scale.value;
                let s = d2 / (l * l);
                let k = (-0.5 * s).exp();
                grad[0] = k * s;
                k
            }
            KernelExpr::Matern { length_scale, nu } => {
                let (k, dk) = matern(d2.sqrt() / length_scale.value, *nu);
                grad[0] = dk;
                k
            }
            KernelExpr::RationalQuadratic { length_scale, alpha } => {
                let (l, a) = (length_scale.value, alpha.value);
                let q = d2 / (2.0 * a * l * l);
                let base = 1.0 + q;
                let k = base.powf(-a);
                grad[0] = (d2 / (l * l)) * k / base;
                grad[1] = a * k * (q / base - base.ln());
                k
            }
            KernelExpr::WhiteNoise(s) => {
                let v = if same { s.value } else { 0.0 };
                grad[0] = v;
                v
            }
            KernelExpr::Sum(a, b) => {
                let (ga, gb) = grad.split_at_mut(a.n_params());
                a.value_and_grad(d2, same, ga) + b.value_and_grad(d2, same, gb)
            }
            KernelExpr::Product(a, b) => {
                let (ga, gb) = grad.split_at_mut(a.n_params());
                let va = a.value_and_grad(d2, same, ga);
                let vb = b.value_and_grad(d2, same, gb);
                ga.iter_mut().for_each(|g| *g *= vb);
                gb.iter_mut().for_each(|g| *g *= va);
                va * vb
            }
        }
    }

    /// Prior variance `k(x, x)` of a sample with itself.
    pub fn self_variance(&self) -> f64 {
        self.value(0.0, true)
    }
}

/// Matérn value and its derivative with respect to `log ℓ`, with `r = d / ℓ`.
fn matern(r: f64, nu: MaternNu) -> (f64, f64) {
    match nu {
        MaternNu::Half => {
            let k = (-r).exp();
            (k, r * k)
        }
        MaternNu::ThreeHalves => {
            let u = 3f64.sqrt() * r;
            let e = (-u).exp();
            ((1.0 + u) * e, u * u * e)
        }
        MaternNu::FiveHalves => {
            let u = 5f64.sqrt() * r;
            let e = (-u).exp();
            ((1.0 + u + u * u / 3.0) * e, u * u * (1.0 + u) / 3.0 * e)
        }
    }
}

fn check_dims(a: &Features, b: &Features) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Cross-covariance matrix `K[i, j] = k(x_i, x'_j)`. When `same_set` is
/// true, `xs` and `ys` are the same samples and white noise lands on the diagonal.
pub fn gram_matrix(kernel: &KernelExpr, xs: &Features, ys: &Features, same_set: bool) -> Result<Matrix> {
    check_dims(xs, ys)?;
    if same_set && xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let (n, m) = (xs.len(), ys.len());
    let mut k = Matrix::zeros(n, m);
    if same_set {
        for i in 0..n {
            for j in 0..=i {
                let v = kernel.value(squared_distance(xs.row(i), xs.row(j)), i == j);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
    } else {
        for i in 0..n {
            let xi = xs.row(i);
            let row = k.row_mut(i);
            for (j, out) in row.iter_mut().enumerate() {
                *out = kernel.value(squared_distance(xi, ys.row(j)), false);
            }
        }
    }
    Ok(k)
}

/// `k(x_i, x_i)` for every row, white noise included.
pub fn gram_diag(kernel: &KernelExpr, xs: &Features) -> Vec<f64> {
    vec![kernel.self_variance(); xs.len()]
}

/// Same-set Gram matrix together with `∂K/∂log θ_h` for every free parameter.
pub fn gram_with_grads(kernel: &KernelExpr, xs: &Features) -> (Matrix, Vec<Matrix>) {
    let n = xs.len();
    let p = kernel.n_params();
    let mut k = Matrix::zeros(n, n);
    let mut grads = vec![Matrix::zeros(n, n); p];
    let mut g = vec![0.0; p];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.value_and_grad(squared_distance(xs.row(i), xs.row(j)), i == j, &mut g);
            k[(i, j)] = v;
            k[(j, i)] = v;
            for (h, gh) in g.iter().enumerate() {
                grads[h][(i, j)] = *gh;
                grads[h][(j, i)] = *gh;
            }
        }
    }
    (k, grads)
}

/// `∂K/∂log θ_h` for each free hyperparameter of a same-set Gram matrix.
pub fn kernel_grad_log_hyper(kernel: &KernelExpr, xs: &Features) -> Vec<Matrix> {
    gram_with_grads(kernel, xs).1
}

/// `const(c) * matern(ℓ, ν) + white(σn²)` with the given bounds.
pub fn composite_kernel(c: f64, length_scale: f64, nu: f64, noise: f64, bounds: KernelBounds) -> Result<KernelExpr> {
    Ok(
        KernelExpr::Constant(HyperParam::new(c, bounds.constant.0, bounds.constant.1)?)
            * KernelExpr::Matern {
                length_scale: HyperParam::new(length_scale, bounds.length_scale.0, bounds.length_scale.1)?,
                nu: MaternNu::from_f64(nu)?,
            }
            + KernelExpr::WhiteNoise(HyperParam::new(noise, bounds.noise.0, bounds.noise.1)?),
    )
}

/// Composite kernel with the default template `c = 1, ℓ = 1, ν = 1.5, σn² = 0.1`.
pub fn default_composite() -> KernelExpr {
    composite_kernel(1.0, 1.0, 1.5, 0.1, KernelBounds::default()).expect("defaults lie within bounds")
}

/// Stationary base family of an ablation variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseKernel {
    Rbf,
    RationalQuadratic,
    Matern,
}

/// How the base kernel is decorated with scale and noise terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decoration {
    PlusNoise,
    Bare,
    Scaled,
    ScaledPlusNoise,
}

/// Template values for ablation variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelTemplate {
    pub constant: f64,
    pub length_scale: f64,
    pub nu: f64,
    pub alpha: f64,
    pub noise: f64,
    #[serde(default)]
    pub bounds: KernelBounds,
}

impl Default for KernelTemplate {
    fn default() -> Self {
        Self {
            constant: 1.0,
            length_scale: 1.0,
            nu: 1.5,
            alpha: 1.0,
            noise: 0.1,
            bounds: KernelBounds::default(),
        }
    }
}

/// One of the twelve base × decoration combinations.
pub fn ablation_kernel(base: BaseKernel, decoration: Decoration, t: &KernelTemplate) -> Result<KernelExpr> {
    let b = t.bounds;
    let ls = HyperParam::new(t.length_scale, b.length_scale.0, b.length_scale.1)?;
    let core = match base {
        BaseKernel::Rbf => KernelExpr::Rbf { length_scale: ls },
        BaseKernel::RationalQuadratic => KernelExpr::RationalQuadratic {
            length_scale: ls,
            alpha: HyperParam::new(t.alpha, b.alpha.0, b.alpha.1)?,
        },
        BaseKernel::Matern => KernelExpr::Matern {
            length_scale: ls,
            nu: MaternNu::from_f64(t.nu)?,
        },
    };
    let constant = || HyperParam::new(t.constant, b.constant.0, b.constant.1).map(KernelExpr::Constant);
    let noise = || HyperParam::new(t.noise, b.noise.0, b.noise.1).map(KernelExpr::WhiteNoise);
    Ok(match decoration {
        Decoration::PlusNoise => core + noise()?,
        Decoration::Bare => core,
        Decoration::Scaled => constant()? * core,
        Decoration::ScaledPlusNoise => constant()? * core + noise()?,
    })
}

/// Display label of an ablation variant, e.g. `k_const × k_Matérn + k_WN`.
pub fn ablation_label(base: BaseKernel, decoration: Decoration) -> String {
    let name = match base {
        BaseKernel::Rbf => "k_RBF",
        BaseKernel::RationalQuadratic => "k_RQ",
        BaseKernel::Matern => "k_Matérn",
    };
    match decoration {
        Decoration::PlusNoise => format!("{name} + k_WN"),
        Decoration::Bare => name.to_string(),
        Decoration::Scaled => format!("k_const × {name}"),
        Decoration::ScaledPlusNoise => format!("k_const × {name} + k_WN"),
    }
}

/// The twelve kernel-ablation variants in table order.
pub fn ablation_variants(t: &KernelTemplate) -> Result<Vec<(String, KernelExpr)>> {
    let mut out = Vec::with_capacity(12);
    for base in [BaseKernel::Rbf, BaseKernel::RationalQuadratic, BaseKernel::Matern] {
        for deco in [
            Decoration::PlusNoise,
            Decoration::Bare,
            Decoration::Scaled,
            Decoration::ScaledPlusNoise,
        ] {
            out.push((ablation_label(base, deco), ablation_kernel(base, deco, t)?));
        }
    }
    Ok(out)
}

impl fmt::Display for KernelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelExpr::Constant(c) => write!(f, "const({})", c.value),
            KernelExpr::Rbf { length_scale } => write!(f, "rbf(l={})", length_scale.value),
            KernelExpr::Matern { length_scale, nu } => {
                write!(f, "matern(l={},nu={})", length_scale.value, nu.as_f64())
            }
            KernelExpr::RationalQuadratic { length_scale, alpha } => {
                write!(f, "rq(l={},alpha={})", length_scale.value, alpha.value)
            }
            KernelExpr::WhiteNoise(s) => write!(f, "white({})", s.value),
            KernelExpr::Sum(a, b) => {
                write!(f, "{a} + ")?;
                if matches!(**b, KernelExpr::Sum(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            KernelExpr::Product(a, b) => {
                if matches!(**a, KernelExpr::Sum(..)) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                f.write_str(" * ")?;
                if matches!(**b, KernelExpr::Sum(..) | KernelExpr::Product(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

impl std::str::FromStr for KernelExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_kernel(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng};

    fn random_features(n: usize, d: usize, seed: u64) -> Features {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
        Features::new(d, data).unwrap()
    }

    fn every_leaf_composition() -> KernelExpr {
        KernelExpr::constant(1.7).unwrap() * KernelExpr::matern(0.8, 2.5).unwrap()
            + KernelExpr::rbf(1.3).unwrap() * KernelExpr::rational_quadratic(0.6, 2.0).unwrap()
            + KernelExpr::matern(0.5, 0.5).unwrap()
            + KernelExpr::white(0.2).unwrap()
    }

    #[test]
    fn matern_closed_forms() {
        let k = KernelExpr::matern(1.0, 1.5).unwrap();
        assert_eq!(k.eval(&[0.3, 0.1], &[0.3, 0.1], false).unwrap(), 1.0);
        let k = KernelExpr::matern(1.0, 0.5).unwrap();
        let v = k.eval(&[0.0], &[1.0], false).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.3678794).abs() < 1e-7);
    }

    #[test]
    fn composite_same_instance() {
        let k = composite_kernel(4.0, 1.0, 1.5, 0.25, KernelBounds::default()).unwrap();
        assert_eq!(k.eval(&[1.0, 2.0], &[1.0, 2.0], true).unwrap(), 4.25);
        // coincident but distinct samples get no noise
        assert_eq!(k.eval(&[1.0, 2.0], &[1.0, 2.0], false).unwrap(), 4.0);
        let d = default_composite();
        assert!((d.eval(&[0.0], &[0.0], true).unwrap() - 1.1).abs() < 1e-15);
        assert_eq!(d.to_string(), "const(1) * matern(l=1,nu=1.5) + white(0.1)");
    }

    #[test]
    fn rbf_and_rq_values() {
        let k = KernelExpr::rbf(2.0).unwrap();
        assert!((k.value(4.0, false) - (-0.5f64).exp()).abs() < 1e-15);
        let k = KernelExpr::rational_quadratic(1.0, 2.0).unwrap();
        assert!((k.value(1.0, false) - (1.25f64).powf(-2.0)).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_dimension_mismatch() {
        let k = default_composite();
        assert!(matches!(
            k.eval(&[0.0, 1.0], &[0.0], false),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn factory_rejects_nonpositive() {
        assert!(composite_kernel(0.0, 1.0, 1.5, 0.1, KernelBounds::default()).is_err());
        assert!(composite_kernel(1.0, -1.0, 1.5, 0.1, KernelBounds::default()).is_err());
        assert!(composite_kernel(1.0, 1.0, 1.5, 0.0, KernelBounds::default()).is_err());
        assert!(composite_kernel(1.0, 1.0, 1.0, 0.1, KernelBounds::default()).is_err());
    }

    #[test]
    fn ablation_table_rows() {
        let v = ablation_variants(&KernelTemplate::default()).unwrap();
        assert_eq!(v.len(), 12);
        let rbf_wn = v.iter().find(|(l, _)| l == "k_RBF + k_WN").unwrap();
        assert_eq!(rbf_wn.1.to_string(), "rbf(l=1) + white(0.1)");
        let best = v.iter().find(|(l, _)| l == "k_const × k_Matérn + k_WN").unwrap();
        assert_eq!(best.1, default_composite());
    }

    #[test]
    fn gram_structure() {
        let k = composite_kernel(4.0, 0.7, 1.5, 0.25, KernelBounds::default()).unwrap();
        let x = random_features(6, 4, 1);
        let g = gram_matrix(&k, &x, &x, true).unwrap();
        assert_eq!(g.max_abs_asymmetry(), 0.0);
        for d in g.diag() {
            assert_eq!(d, 4.25);
        }
        let y = random_features(3, 4, 2);
        let cross = gram_matrix(&k, &x, &y, false).unwrap();
        let no_noise = KernelExpr::constant(4.0).unwrap() * KernelExpr::matern(0.7, 1.5).unwrap();
        let expected = gram_matrix(&no_noise, &x, &y, false).unwrap();
        assert_eq!(cross, expected);
        assert_eq!(gram_diag(&k, &y), vec![4.25; 3]);
    }

    fn min_eigenvalue(g: &Matrix) -> f64 {
        let n = g.nrows();
        let m = DMatrix::from_row_slice(n, n, g.as_slice());
        SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn gram_eight_points_psd() {
        let k = default_composite();
        let x = random_features(8, 4, 5);
        let g = gram_matrix(&k, &x, &x, true).unwrap();
        assert!(min_eigenvalue(&g) >= -1e-10);
    }

    #[test]
    fn psd_all_leaves_up_to_50() {
        let k = every_leaf_composition();
        for (n, seed) in [(5, 1), (20, 2), (50, 3)] {
            let x = random_features(n, 4, seed);
            let g = gram_matrix(&k, &x, &x, true).unwrap();
            let trace: f64 = g.diag().iter().sum();
            assert!(min_eigenvalue(&g) >= -1e-10 * trace / n as f64);
        }
    }

    #[test]
    fn grad_chain_rule_cases() {
        let k = composite_kernel(2.0, 0.9, 1.5, 0.3, KernelBounds::default()).unwrap();
        let x = random_features(5, 3, 9);
        let grads = kernel_grad_log_hyper(&k, &x);
        let scaled = KernelExpr::constant(2.0).unwrap() * KernelExpr::matern(0.9, 1.5).unwrap();
        let part = gram_matrix(&scaled, &x, &x, true).unwrap();
        for (a, b) in grads[0].as_slice().iter().zip(part.as_slice()) {
            assert!((a - b).abs() < 1e-14);
        }
        let mut noise = Matrix::zeros(5, 5);
        noise.add_diag(0.3);
        assert_eq!(grads[2], noise);
    }

    fn check_fd(kernel: &KernelExpr, x: &Features) {
        let analytic = kernel_grad_log_hyper(kernel, x);
        let theta = kernel.log_params();
        let h = 1e-5;
        for p in 0..theta.len() {
            let mut up = theta.clone();
            up[p] += h;
            let mut dn = theta.clone();
            dn[p] -= h;
            let kp = gram_matrix(&kernel.with_log_params(&up).unwrap(), x, x, true).unwrap();
            let km = gram_matrix(&kernel.with_log_params(&dn).unwrap(), x, x, true).unwrap();
            let scale = analytic[p]
                .as_slice()
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(1e-12);
            for ((a, b), c) in kp.as_slice().iter().zip(km.as_slice()).zip(analytic[p].as_slice()) {
                let fd = (a - b) / (2.0 * h);
                assert!((fd - c).abs() <= 1e-4 * scale, "param {p}: fd {fd} vs {c}");
            }
        }
    }

    #[test]
    fn grads_match_finite_differences() {
        let x = random_features(6, 4, 21);
        check_fd(&every_leaf_composition(), &x);
        for (_, k) in ablation_variants(&KernelTemplate {
            constant: 2.5,
            length_scale: 0.7,
            nu: 2.5,
            alpha: 0.8,
            noise: 0.05,
            bounds: KernelBounds::default(),
        })
        .unwrap()
        {
            check_fd(&k, &x);
        }
    }

    proptest! {
        #[test]
        fn symmetric_in_arguments(a in prop::collection::vec(-3.0..3.0f64, 4), b in prop::collection::vec(-3.0..3.0f64, 4)) {
            let k = every_leaf_composition();
            prop_assert_eq!(k.eval(&a, &b, false).unwrap(), k.eval(&b, &a, false).unwrap());
        }

        #[test]
        fn stationary_leaves_decay(l in 0.05..5.0f64, alpha in 0.05..20.0f64) {
            let leaves = [
                KernelExpr::rbf(l).unwrap(),
                KernelExpr::matern(l, 0.5).unwrap(),
                KernelExpr::matern(l, 1.5).unwrap(),
                KernelExpr::matern(l, 2.5).unwrap(),
                KernelExpr::rational_quadratic(l, alpha).unwrap(),
            ];
            for k in &leaves {
                let mut prev = f64::INFINITY;
                for i in 0..200 {
                    let d = i as f64 * 0.05;
                    let v = k.value(d * d, false);
                    prop_assert!(v <= prev);
                    prev = v;
                }
            }
        }

        #[test]
        fn grads_fd_random_instances(seed in 0u64..1000) {
            let x = random_features(6, 3, seed);
            check_fd(&every_leaf_composition(), &x);
        }
    }
}
