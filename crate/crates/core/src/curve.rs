//! Rational spectral curves with the Cauchy kernel.
//!
//! A [`SpectralCurve`] holds x and y as rational functions of the global
//! coordinate z.  [`SpectralCurve::analyze`] finds the simple zeros of dx,
//! builds the local coordinate s with `x = u + s²/2` at each of them, and
//! exposes the evaluated kernels `B(P_i, ·)` and the auxiliary differentials
//! `V^i_k` both globally (as rational functions) and as local expansions.
//!
//! Differentials are represented by their coefficient of `dz` (globally) or
//! of `ds` (locally).

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use parking_lot::RwLock;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exact::{odd_double_factorial, qi, ExtScalar, Rational};
use crate::series::{LaurentSeries, Poly, RatFunc};

/// Type of a zero of dx, according to the behaviour of y there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PointKind {
    /// y is holomorphic at the point.
    Regular,
    /// y has a simple pole at the point.
    Irregular,
}

/// Spectral curve data before analysis.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCurve {
    /// Identifier used for memoization and output.
    pub name: String,
    pub x: RatFunc,
    pub y: RatFunc,
    /// Optional branch constants `s₁` keyed by 1-based critical point index.
    pub branch_overrides: BTreeMap<usize, ExtScalar>,
}

/// Names of the built-in curves.
pub const BUILTIN_CURVES: [&str; 4] = ["airy", "bessel", "a2", "bgw-a2"];

impl SpectralCurve {
    pub fn new(name: impl Into<String>, x: RatFunc, y: RatFunc) -> Self {
        Self {
            name: name.into(),
            x,
            y,
            branch_overrides: BTreeMap::new(),
        }
    }

    /// The Airy curve `x = z²/2, y = z`.
    pub fn airy() -> Self {
        let x = RatFunc::from_poly(Poly::monomial(ExtScalar::frac(1, 2), 2));
        Self::new("airy", x, RatFunc::from_poly(Poly::var()))
    }

    /// The Bessel curve `x = z²/2, y = 1/z`.
    pub fn bessel() -> Self {
        let x = RatFunc::from_poly(Poly::monomial(ExtScalar::frac(1, 2), 2));
        let y = RatFunc::new(Poly::one(), Poly::var()).expect("nonzero");
        Self::new("bessel", x, y)
    }

    /// The A2 curve `x = z³ - 3z, y = √-3 z`.
    pub fn a2() -> Self {
        let x = RatFunc::from_poly(Poly::from_ints(&[0, -3, 0, 1]));
        let y = RatFunc::from_poly(Poly::monomial(ExtScalar::sqrt_minus3(), 1));
        Self::new("a2", x, y)
    }

    /// The BGW-type A2 curve `x = z³ - 3z, y = √-3 / (3z² - 3)`.
    pub fn bgw_a2() -> Self {
        let x = RatFunc::from_poly(Poly::from_ints(&[0, -3, 0, 1]));
        let y = RatFunc::new(Poly::constant(ExtScalar::sqrt_minus3()), Poly::from_ints(&[-3, 0, 3])).expect("nonzero");
        Self::new("bgw-a2", x, y)
    }

    /// Looks up a built-in curve by name.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "airy" => Ok(Self::airy()),
            "bessel" => Ok(Self::bessel()),
            "a2" => Ok(Self::a2()),
            "bgw-a2" => Ok(Self::bgw_a2()),
            other => Err(Error::InvalidCurve(format!(
                "unknown built-in curve {other:?}; expected one of {BUILTIN_CURVES:?}"
            ))),
        }
    }

    /// Sets the branch constant of a critical point (1-based index).
    pub fn with_branch(mut self, index: usize, s1: ExtScalar) -> Self {
        self.branch_overrides.insert(index, s1);
        self
    }

    /// Parses the JSON curve format
    /// `{"variable":"z","x":{"num":[..],"den":[..]},"y":{..},"branch_overrides":{"1":..}}`.
    pub fn from_json(name: &str, v: &Value) -> Result<Self> {
        let ratfunc = |key: &str| -> Result<RatFunc> {
            let obj = v
                .get(key)
                .ok_or_else(|| Error::Parse(format!("curve file lacks {key:?}")))?;
            let poly = |k: &str| -> Result<Poly> {
                match obj.get(k) {
                    None if k == "den" => Ok(Poly::one()),
                    None => Err(Error::Parse(format!("{key}.{k} missing"))),
                    Some(arr) => {
                        let items = arr
                            .as_array()
                            .ok_or_else(|| Error::Parse(format!("{key}.{k} must be an array")))?;
                        Ok(Poly::new(
                            items.iter().map(ExtScalar::from_json).collect::<Result<Vec<_>>>()?,
                        ))
                    }
                }
            };
            RatFunc::new(poly("num")?, poly("den")?)
        };
        let mut curve = Self::new(name, ratfunc("x")?, ratfunc("y")?);
        if let Some(b) = v.get("branch_overrides").and_then(Value::as_object) {
            for (k, val) in b {
                let idx: usize = k.parse().map_err(|_| Error::Parse(format!("bad branch index {k:?}")))?;
                curve.branch_overrides.insert(idx, ExtScalar::from_json(val)?);
            }
        }
        Ok(curve)
    }

    /// Inverse of [`SpectralCurve::from_json`].
    pub fn to_json(&self) -> Value {
        let rf = |f: &RatFunc| {
            json!({
                "num": f.num().coeffs().iter().map(ExtScalar::to_json).collect::<Vec<_>>(),
                "den": f.den().coeffs().iter().map(ExtScalar::to_json).collect::<Vec<_>>(),
            })
        };
        let branches: serde_json::Map<String, Value> = self
            .branch_overrides
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_json()))
            .collect();
        json!({"variable": "z", "x": rf(&self.x), "y": rf(&self.y), "branch_overrides": branches})
    }

    /// Finds the critical points and builds local frames to order `order`.
    pub fn analyze(&self, order: i64) -> Result<AnalyzedCurve> {
        AnalyzedCurve::new(self.clone(), order)
    }
}

/// A simple zero of dx with its local data.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint {
    /// 0-based index; displayed 1-based.
    pub index: usize,
    /// Location in the global coordinate.
    pub z: ExtScalar,
    /// Critical value `x(z)`.
    pub u: ExtScalar,
    /// Branch constant with `s1² = x''(z)`.
    pub s1: ExtScalar,
    pub kind: PointKind,
}

/// Local coordinate data at one critical point.
#[derive(Clone, Debug)]
pub struct LocalFrame {
    /// `ζ(s) = z(s) - z_i`, valuation one.
    pub zeta: LaurentSeries,
    /// `dζ/ds`.
    pub zeta_prime: LaurentSeries,
}

impl LocalFrame {
    /// `ζ(-s)`, the involution in the global coordinate shifted by `z_i`.
    pub fn zeta_hat(&self) -> LaurentSeries {
        self.zeta.reflect()
    }
}

/// Sparse linear combination of auxiliary differentials, keyed by `(i, k)`.
pub type VCombination = BTreeMap<(usize, usize), ExtScalar>;

/// Spectral curve with critical points, frames, and caches of derived data.
pub struct AnalyzedCurve {
    pub curve: SpectralCurve,
    pub points: Vec<CriticalPoint>,
    pub frames: Vec<LocalFrame>,
    order: i64,
    dx: RatFunc,
    v_global: RwLock<Vec<Vec<RatFunc>>>,
    v_local: RwLock<HashMap<(usize, usize, usize), Arc<LaurentSeries>>>,
    projections: RwLock<HashMap<(usize, i64), Arc<VCombination>>>,
}

impl std::fmt::Debug for AnalyzedCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyzedCurve")
            .field("curve", &self.curve.name)
            .field("points", &self.points)
            .field("order", &self.order)
            .finish()
    }
}

fn cmp_points(a: &ExtScalar, b: &ExtScalar) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    match (a.to_rational(), b.to_rational()) {
        (Some(x), Some(y)) => x.cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.to_string().cmp(&b.to_string()),
    }
}

impl AnalyzedCurve {
    fn new(curve: SpectralCurve, order: i64) -> Result<Self> {
        if order < 4 {
            return Err(Error::Invalid("frame order must be at least 4".into()));
        }
        let dx = curve.x.derivative();
        if dx.is_zero() {
            return Err(Error::InvalidCurve("x is constant".into()));
        }
        let mut roots = dx.num().roots()?;
        roots.sort_by(|a, b| cmp_points(&a.0, &b.0));
        let mut points = Vec::new();
        let mut frames = Vec::new();
        for (idx, (z, mult)) in roots.into_iter().enumerate() {
            if mult != 1 {
                return Err(Error::InvalidCurve(format!("dx has a zero of order {mult} at z = {z}")));
            }
            let u = curve.x.eval(&z)?;
            let x2 = dx.derivative().eval(&z)?;
            let s1 = match curve.branch_overrides.get(&(idx + 1)) {
                Some(b) => {
                    if &(b * b) != &x2 {
                        return Err(Error::InvalidCurve(format!(
                            "branch override {b} does not square to x''({z}) = {x2}"
                        )));
                    }
                    b.clone()
                }
                None => x2.sqrt().map_err(|_| {
                    Error::InvalidCurve(format!("sqrt of x''({z}) = {x2} is not in K; supply a branch override"))
                })?,
            };
            let kind = match curve.y.den().multiplicity(&z).unwrap_or(0) {
                0 => PointKind::Regular,
                1 => PointKind::Irregular,
                m => {
                    return Err(Error::InvalidCurve(format!(
                        "y has a pole of order {m} at the critical point z = {z}"
                    )))
                }
            };
            frames.push(build_frame(&curve.x, &z, &u, &s1, order)?);
            points.push(CriticalPoint {
                index: idx,
                z,
                u,
                s1,
                kind,
            });
        }
        if points.is_empty() {
            return Err(Error::InvalidCurve("dx has no zeros".into()));
        }
        Ok(Self {
            curve,
            points,
            frames,
            order,
            dx,
            v_global: RwLock::new(Vec::new()),
            v_local: RwLock::new(HashMap::new()),
            projections: RwLock::new(HashMap::new()),
        })
    }

    /// Frame truncation order.
    pub fn order(&self) -> i64 {
        self.order
    }

    /// Number of critical points.
    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    /// True when every critical point is regular.
    pub fn is_regular(&self) -> bool {
        self.points.iter().all(|p| p.kind == PointKind::Regular)
    }

    /// `dx/dz`.
    pub fn dx(&self) -> &RatFunc {
        &self.dx
    }

    /// `B(P_i, ·) = (1/s₁) dz / (z - z_i)²`, as the coefficient of dz.
    pub fn bergman_at_critical(&self, i: usize) -> Result<RatFunc> {
        let p = &self.points[i];
        RatFunc::new(Poly::constant(p.s1.inv()?), Poly::linear_root(&p.z).pow(2))
    }

    /// Global rational form of `V^i_k` (coefficient of dz), with
    /// `V^i_0 = B(P_i, ·)` and `V^i_{k+1} = -d(V^i_k / dx)`.
    pub fn aux_differential(&self, i: usize, k: usize) -> Result<RatFunc> {
        {
            let cache = self.v_global.read();
            if let Some(v) = cache.get(i).and_then(|row| row.get(k)) {
                return Ok(v.clone());
            }
        }
        let mut cache = self.v_global.write();
        if cache.len() < self.points.len() {
            for j in cache.len()..self.points.len() {
                cache.push(vec![self.bergman_at_critical(j)?]);
            }
        }
        while cache[i].len() <= k {
            let last = cache[i].last().expect("seeded").clone();
            let next = last.div(&self.dx)?.derivative().neg();
            cache[i].push(next);
        }
        Ok(cache[i][k].clone())
    }

    /// Expansion of a global differential `f(z) dz` in the frame at point
    /// `j`, as the coefficient of ds, known through `s^order`.
    pub fn expand_differential(&self, f: &RatFunc, j: usize, order: i64) -> Result<LaurentSeries> {
        let p = &self.points[j];
        let fr = &self.frames[j];
        let num = f.num().shift(&p.z).eval_series(&fr.zeta)?;
        let den = f.den().shift(&p.z).eval_series(&fr.zeta)?;
        let vn = num.valuation().unwrap_or(0);
        let quotient = num.mul(&den.inv_to(order - vn)?);
        Ok(quotient.mul(&fr.zeta_prime).truncate(order))
    }

    /// Local expansion of `V^i_k` in frame `j` (coefficient of ds).  The
    /// result is known through `s^(order - 2k)` where `order` is the frame
    /// order.
    pub fn aux_expansion(&self, i: usize, j: usize, k: usize) -> Result<Arc<LaurentSeries>> {
        if let Some(s) = self.v_local.read().get(&(i, j, k)) {
            return Ok(s.clone());
        }
        let series = if k == 0 {
            let b = self.bergman_at_critical(i)?;
            self.expand_differential(&b, j, self.order)?
        } else {
            let prev = self.aux_expansion(i, j, k - 1)?;
            prev.shift(-1).derive().neg()
        };
        let arc = Arc::new(series);
        self.v_local.write().insert((i, j, k), arc.clone());
        Ok(arc)
    }

    /// Coefficients of the V-basis combination whose even principal parts
    /// match those of the given local expansions (one per critical point,
    /// coefficient of ds).  Odd principal-part terms are ignored; on a
    /// differential in the span of the `V^i_k` this recovers its coordinates.
    pub fn project_principal_parts(&self, parts: &[LaurentSeries]) -> Result<VCombination> {
        let n = self.points.len();
        let mut current: Vec<BTreeMap<i64, ExtScalar>> = parts
            .iter()
            .map(|s| s.terms().filter(|(e, _)| *e < 0).map(|(e, c)| (e, c.clone())).collect())
            .collect();
        let top = current
            .iter()
            .filter_map(|m| m.keys().next().copied())
            .min()
            .unwrap_or(0);
        let mut out = VCombination::new();
        if top > -2 {
            return Ok(out);
        }
        let kmax = ((-top - 2) / 2) as usize;
        for kk in (0..=kmax).rev() {
            let e = -(2 * kk as i64) - 2;
            let norm = Rational::from_integer(odd_double_factorial(kk as i64 + 1));
            let mut level = Vec::new();
            for (j, part) in current.iter().enumerate() {
                if let Some(c) = part.get(&e) {
                    if !c.is_zero() {
                        level.push((j, c.scale(&norm.recip())));
                    }
                }
            }
            for (j, c) in level {
                for (t, part) in current.iter_mut().enumerate().take(n) {
                    let v = self.aux_expansion(j, t, kk)?;
                    for (ee, vc) in v.terms() {
                        if ee >= 0 {
                            break;
                        }
                        let entry = part.entry(ee).or_insert_with(ExtScalar::zero);
                        *entry -= &(&c * vc);
                    }
                }
                out.insert((j, kk), c);
            }
        }
        Ok(out)
    }

    /// V-basis coordinates of `dz / (z - z_α)^m`, cached.
    pub fn projection_of_pole(&self, alpha: usize, m: i64) -> Result<Arc<VCombination>> {
        if let Some(p) = self.projections.read().get(&(alpha, m)) {
            return Ok(p.clone());
        }
        let mut parts = vec![LaurentSeries::zero(-1); self.points.len()];
        if m >= 2 {
            let fr = &self.frames[alpha];
            let inv = fr.zeta.inv_to(-1)?;
            let mut pow = LaurentSeries::one();
            for _ in 0..m {
                pow = pow.mul(&inv);
            }
            parts[alpha] = pow.mul(&fr.zeta_prime).truncate(-1);
        }
        let comb = Arc::new(self.project_principal_parts(&parts)?);
        self.projections.write().insert((alpha, m), comb.clone());
        Ok(comb)
    }

    /// Global rational form of a V-basis combination.
    pub fn combination_to_rational(&self, comb: &VCombination) -> Result<RatFunc> {
        let mut acc = RatFunc::zero();
        for ((i, k), c) in comb {
            acc = acc.add(&self.aux_differential(*i, *k)?.scale(c));
        }
        Ok(acc)
    }

    /// Checks `d(dy/dx) = -Σ_i Res_{p'=P_i} (dy/dx)(p') B(p', p)`.
    pub fn check_y_compatibility(&self) -> Result<bool> {
        let f = self.curve.y.derivative().div(&self.dx)?;
        let lhs = f.derivative();
        let mut rhs = RatFunc::zero();
        for p in &self.points {
            let ser = f.expand_at(&p.z, -1)?;
            // Res_{t} f(a+t) dt/(a+t-z)^2 = Σ_j (-1)^j (j+1) f_{-j-1} / (a-z)^{j+2}.
            for (e, c) in ser.terms() {
                if e >= 0 {
                    continue;
                }
                let j = -e - 1;
                let sign = if j % 2 == 0 { 1 } else { -1 };
                let coef = c.scale(&qi(sign * (j + 1)));
                let den = Poly::new(vec![p.z.clone(), ExtScalar::from_int(-1)]).pow((j + 2) as u32);
                rhs = rhs.sub(&RatFunc::new(Poly::constant(coef), den)?);
            }
        }
        Ok(lhs == rhs)
    }

    /// Rational antiderivative Φ of `y dx`, failing in the logarithmic case.
    pub fn ydx_primitive(&self) -> Result<RatFunc> {
        self.curve.y.mul(&self.dx).antiderivative()
    }

    /// Flat differentials of the A2 curve:
    /// `ξ^1_0 = dz/(1-z)² + dz/(1+z)²`, `ξ^2_0 = dz/(1-z)² - dz/(1+z)²`, and
    /// `ξ^α_{k+1} = -d(ξ^α_k / dx)`.
    pub fn flat_differential(&self, alpha: usize, k: usize) -> Result<RatFunc> {
        let a = RatFunc::new(Poly::one(), Poly::from_ints(&[-1, 1]).pow(2))?;
        let b = RatFunc::new(Poly::one(), Poly::from_ints(&[1, 1]).pow(2))?;
        let mut xi = match alpha {
            0 => a.add(&b),
            1 => a.sub(&b),
            _ => return Err(Error::Invalid("flat index must be 1 or 2".into())),
        };
        for _ in 0..k {
            xi = xi.div(&self.dx)?.derivative().neg();
        }
        Ok(xi)
    }

    /// `s^{2k}/(2k+1)!!`-normalized leading coefficient check helper: the
    /// coefficient of `s^{-2k-2}` in `V^i_k` at its own point.
    pub fn leading_coefficient(&self, i: usize, k: usize) -> Result<ExtScalar> {
        self.aux_expansion(i, i, k)?.coeff(-(2 * k as i64) - 2)
    }
}

/// Builds `ζ(s)` from `s² = 2(x(z_i + ζ) - u)` with `s = s₁ ζ (1 + O(ζ))`.
fn build_frame(x: &RatFunc, z: &ExtScalar, u: &ExtScalar, s1: &ExtScalar, order: i64) -> Result<LocalFrame> {
    // x(z+t) - u = c2 t² (1 + p(t)).
    let ex = x.expand_at(z, order + 2)?;
    let shifted = ex.sub(&LaurentSeries::constant(u.clone()));
    let c2 = shifted.coeff(2)?;
    if c2.is_zero() {
        return Err(Error::InvalidCurve(format!("x''({z}) vanishes")));
    }
    let p = shifted.shift(-2).scale(&c2.inv()?).sub(&LaurentSeries::one());
    let root = LaurentSeries::sqrt_one_plus(&p)?;
    // s(t) = s1 t sqrt(1 + p(t)); check s1² = 2 c2.
    if &(s1 * s1) != &c2.scale(&qi(2)) {
        return Err(Error::InvalidCurve("branch constant mismatch".into()));
    }
    let s_of_t = root.shift(1).scale(s1).truncate(order);
    let zeta = s_of_t.reversion()?;
    let zeta_prime = zeta.derive();
    Ok(LocalFrame { zeta, zeta_prime })
}
