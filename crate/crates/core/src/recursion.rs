//! Topological recursion on an analyzed rational spectral curve.
//!
//! Correlators are stored as symmetric tensors over the auxiliary
//! differentials `V^i_k`.  A coefficient is computed by fixing the labels of
//! the spectator slots, assembling the recursion integrand as a Laurent series
//! in the local coordinate at each critical point, and pairing it with the
//! kernel projected onto the V-basis.
//!
//! With `ω_{0,1} = -y dx` the kernel reads
//! `K(z₁, p) = -½ (G(s) - G(-s)) / ((y(s) - y(-s)) s ds)` where
//! `G(s) = dz₁ / (z₁ - z(s))`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock};

use parking_lot::{Mutex, RwLock};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::curve::{AnalyzedCurve, PointKind, SpectralCurve};
use crate::error::{Error, Result};
use crate::exact::{q, qi, ExtScalar};
use crate::series::{LaurentSeries, Poly, RatFunc, EXACT};

/// Label `(i, k)` of the auxiliary differential `V^i_k` (0-based point index).
pub type Label = (usize, usize);

/// Sorted multi-index of labels.
pub type Key = Vec<Label>;

/// A correlator `ω_{g,n}` in the V-basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Correlator {
    pub g: u32,
    pub n: usize,
    /// Nonzero coefficients keyed by sorted multi-index.
    pub coeffs: BTreeMap<Key, ExtScalar>,
}

impl Correlator {
    /// Coefficient of an arbitrary (not necessarily sorted) multi-index.
    pub fn get(&self, key: &[Label]) -> ExtScalar {
        let mut k = key.to_vec();
        k.sort_unstable();
        self.coeffs.get(&k).cloned().unwrap_or_else(ExtScalar::zero)
    }

    /// True when every coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// JSON form with 1-based point indices.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .coeffs
            .iter()
            .map(|(k, v)| {
                let idx: Vec<Value> = k.iter().map(|(i, kk)| json!([i + 1, kk])).collect();
                json!({"index": idx, "value": v.to_json()})
            })
            .collect();
        json!({"g": self.g, "n": self.n, "basis": "V", "terms": terms})
    }

    /// Inverse of [`Correlator::to_json`].
    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = || Error::Parse("malformed correlator JSON".into());
        let g = v.get("g").and_then(Value::as_u64).ok_or_else(bad)? as u32;
        let n = v.get("n").and_then(Value::as_u64).ok_or_else(bad)? as usize;
        let mut coeffs = BTreeMap::new();
        for t in v.get("terms").and_then(Value::as_array).ok_or_else(bad)? {
            let idx = t.get("index").and_then(Value::as_array).ok_or_else(bad)?;
            let mut key = Vec::new();
            for pair in idx {
                let p = pair.as_array().ok_or_else(bad)?;
                let i = p.first().and_then(Value::as_u64).ok_or_else(bad)? as usize;
                let k = p.get(1).and_then(Value::as_u64).ok_or_else(bad)? as usize;
                key.push((i.checked_sub(1).ok_or_else(bad)?, k));
            }
            key.sort_unstable();
            coeffs.insert(key, ExtScalar::from_json(t.get("value").ok_or_else(bad)?)?);
        }
        Ok(Self { g, n, coeffs })
    }
}

/// Largest auxiliary index `k` allowed in `ω_{g,n}` by the pole-order bound.
pub fn k_bound(regular: bool, g: u32, n: usize) -> Option<usize> {
    let b = if regular {
        3 * g as i64 - 3 + n as i64
    } else {
        g as i64 - 1
    };
    (b >= 0).then_some(b as usize)
}

/// Sorted multi-indices of length `n` over `points` critical points with
/// every `k <= kmax` and `Σk <= sum_max`.
pub fn enumerate_keys(points: usize, n: usize, kmax: usize, sum_max: usize) -> Vec<Key> {
    let labels: Vec<Label> = (0..points).flat_map(|i| (0..=kmax).map(move |k| (i, k))).collect();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(labels: &[Label], start: usize, n: usize, budget: usize, cur: &mut Vec<Label>, out: &mut Vec<Key>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for idx in start..labels.len() {
            let l = labels[idx];
            if l.1 <= budget {
                cur.push(l);
                rec(labels, idx, n, budget - l.1, cur, out);
                cur.pop();
            }
        }
    }
    rec(&labels, 0, n, sum_max, &mut cur, &mut out);
    out
}

/// Series data derived from one analyzed curve at a fixed frame order.
struct Workspace {
    curve: Arc<AnalyzedCurve>,
    /// Per critical point: projected kernel series by output label.
    kernel: Vec<BTreeMap<Label, LaurentSeries>>,
    /// Per critical point: V-basis expansion of `B(p, z_j)` by spectator label.
    phi: Vec<BTreeMap<Label, LaurentSeries>>,
    /// Per critical point: `B(p, p̂)` as a series in s (coefficient of ds²).
    b_conj: Vec<LaurentSeries>,
    /// Largest label index covered by the tables above.
    kmax: usize,
}

impl Workspace {
    fn new(curve: Arc<AnalyzedCurve>) -> Result<Self> {
        let order = curve.order();
        let npts = curve.num_points();
        let kmax = ((order - 2) / 2).max(0) as usize;
        let mut kernel = Vec::with_capacity(npts);
        let mut phi = Vec::with_capacity(npts);
        let mut b_conj = Vec::with_capacity(npts);
        for alpha in 0..npts {
            let fr = &curve.frames[alpha];
            let a = &curve.points[alpha].z;
            // y(s) as a series.
            let yn = curve.curve.y.num().shift(a).eval_series(&fr.zeta)?;
            let yd = curve.curve.y.den().shift(a).eval_series(&fr.zeta)?;
            let vn = yn.valuation().unwrap_or(0);
            let ys = yn.mul(&yd.inv_to(order - vn)?).truncate(order);
            let dy = ys.sub(&ys.reflect()).shift(1);
            let dyinv = dy.inv()?;
            // Kernel: h_m(s) = -½ (ζ(s)^m - ζ(-s)^m) / ((y(s) - y(-s)) s).
            let mut table: BTreeMap<Label, LaurentSeries> = BTreeMap::new();
            let mut zpow = LaurentSeries::one();
            let zhat = fr.zeta_hat();
            let mut zhpow = LaurentSeries::one();
            for m in 1..=order {
                zpow = zpow.mul(&fr.zeta);
                zhpow = zhpow.mul(&zhat);
                let h = zpow.sub(&zhpow).mul(&dyinv).scale_q(&q(-1, 2));
                let proj = curve.projection_of_pole(alpha, m + 1)?;
                for (label, c) in proj.iter() {
                    let e = table.entry(*label).or_insert_with(|| LaurentSeries::zero(EXACT));
                    *e = e.add(&h.scale(c));
                }
            }
            kernel.push(table);
            // Spectator expansion of B(z(s), z_j) = Σ_m (m+1) ζ^m ζ' dz_j/(z_j-a)^{m+2}.
            let mut ptable: BTreeMap<Label, LaurentSeries> = BTreeMap::new();
            let mut zpow = LaurentSeries::one();
            for m in 0..=order {
                if m > 0 {
                    zpow = zpow.mul(&fr.zeta);
                }
                let base = zpow.mul(&fr.zeta_prime).scale_q(&qi(m + 1));
                let proj = curve.projection_of_pole(alpha, m + 2)?;
                for (label, c) in proj.iter() {
                    let e = ptable.entry(*label).or_insert_with(|| LaurentSeries::zero(EXACT));
                    *e = e.add(&base.scale(c));
                }
            }
            phi.push(ptable);
            // B(p, p̂) = -ζ'(s) ζ'(-s) / (ζ(s) - ζ(-s))².
            let diff = fr.zeta.sub(&zhat);
            let num = fr.zeta_prime.mul(&fr.zeta_prime.reflect()).neg();
            b_conj.push(num.mul(&diff.mul(&diff).inv()?));
        }
        Ok(Self {
            curve,
            kernel,
            phi,
            b_conj,
            kmax,
        })
    }
}

/// Memoizing topological recursion engine for one curve.
pub struct Engine {
    base: SpectralCurve,
    workspace: RwLock<Arc<Workspace>>,
    memo: RwLock<HashMap<(u32, usize), Arc<Correlator>>>,
    compute_lock: Mutex<()>,
    full_support: bool,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("curve", &self.base.name).finish()
    }
}

/// Frame order used for `(g, n)` on a curve of the given kind.
pub fn default_frame_order(regular: bool, g: u32, n: usize) -> i64 {
    let pole = if regular {
        6 * g as i64 - 4 + 2 * n as i64
    } else {
        2 * g as i64
    };
    pole.max(2) + 10
}

impl Engine {
    /// Engine with the default starting frame order.
    pub fn new(curve: SpectralCurve) -> Result<Self> {
        Self::with_options(curve, 16, false)
    }

    /// Engine with an explicit starting frame order.  With `full_support`
    /// the coefficient search is widened beyond the degree bound, so tests
    /// can confirm the extra coefficients vanish.
    pub fn with_options(curve: SpectralCurve, order: i64, full_support: bool) -> Result<Self> {
        let analyzed = Arc::new(curve.analyze(order)?);
        let ws = Workspace::new(analyzed)?;
        Ok(Self {
            base: curve,
            workspace: RwLock::new(Arc::new(ws)),
            memo: RwLock::new(HashMap::new()),
            compute_lock: Mutex::new(()),
            full_support,
        })
    }

    /// Shared engine for a built-in curve (process-wide memo table).
    pub fn shared(name: &str) -> Result<Arc<Self>> {
        static REGISTRY: OnceLock<Mutex<HashMap<String, Arc<Engine>>>> = OnceLock::new();
        let reg = REGISTRY.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = reg.lock();
        if let Some(e) = map.get(name) {
            return Ok(e.clone());
        }
        let e = Arc::new(Self::new(SpectralCurve::builtin(name)?)?);
        map.insert(name.to_string(), e.clone());
        Ok(e)
    }

    /// The analyzed curve at the current frame order.
    pub fn curve(&self) -> Arc<AnalyzedCurve> {
        self.workspace.read().curve.clone()
    }

    /// The curve definition.
    pub fn spectral_curve(&self) -> &SpectralCurve {
        &self.base
    }

    /// True when every critical point is regular.
    pub fn is_regular(&self) -> bool {
        self.curve().is_regular()
    }

    fn ensure_order(&self, order: i64) -> Result<Arc<Workspace>> {
        let ws = self.workspace.read().clone();
        if ws.curve.order() >= order {
            return Ok(ws);
        }
        let analyzed = Arc::new(self.base.analyze(order)?);
        let fresh = Arc::new(Workspace::new(analyzed)?);
        *self.workspace.write() = fresh.clone();
        Ok(fresh)
    }

    /// Bound on k for stored labels of `ω_{g,n}`.
    pub fn k_bound(&self, g: u32, n: usize) -> Option<usize> {
        k_bound(self.is_regular(), g, n)
    }

    fn key_space(&self, g: u32, n: usize) -> Vec<Key> {
        let npts = self.curve().num_points();
        let extra = if self.full_support { 2 } else { 0 };
        match self.k_bound(g, n) {
            Some(b) => enumerate_keys(npts, n, b + extra, b + extra),
            None if self.full_support => enumerate_keys(npts, n, extra - 1, extra - 1),
            None => Vec::new(),
        }
    }

    /// Already computed correlators (for caching to disk).
    pub fn memo_snapshot(&self) -> Vec<Arc<Correlator>> {
        let mut v: Vec<_> = self.memo.read().values().cloned().collect();
        v.sort_by_key(|c| (c.g, c.n));
        v
    }

    /// Seeds the memo table, e.g. from a disk cache.
    pub fn insert_memo(&self, c: Correlator) {
        self.memo.write().insert((c.g, c.n), Arc::new(c));
    }

    /// The correlator `ω_{g,n}` for `2g - 2 + n > 0`, memoized.
    pub fn correlator(&self, g: u32, n: usize) -> Result<Arc<Correlator>> {
        if 2 * g as i64 - 2 + n as i64 <= 0 || n == 0 {
            return Err(Error::Unstable { g, n });
        }
        if let Some(c) = self.memo.read().get(&(g, n)) {
            return Ok(c.clone());
        }
        self.ensure_dependencies(g, n)?;
        let _guard = self.compute_lock.lock();
        if let Some(c) = self.memo.read().get(&(g, n)) {
            return Ok(c.clone());
        }
        let regular = self.is_regular();
        let mut order = default_frame_order(regular, g, n).max(self.curve().order());
        let keys = self.key_space(g, n);
        let result = loop {
            let ws = self.ensure_order(order)?;
            match self.compute_keys(&ws, g, n, &keys) {
                Ok(c) => break c,
                Err(Error::Truncation { .. }) if order < 400 => order = order * 3 / 2 + 2,
                Err(e) => return Err(e),
            }
        };
        let arc = Arc::new(result);
        self.memo.write().insert((g, n), arc.clone());
        Ok(arc)
    }

    fn compute_keys(&self, ws: &Workspace, g: u32, n: usize, keys: &[Key]) -> Result<Correlator> {
        let mut groups: BTreeMap<Key, Vec<Label>> = BTreeMap::new();
        for k in keys {
            groups.entry(k[1..].to_vec()).or_default().push(k[0]);
        }
        let groups: Vec<(Key, Vec<Label>)> = groups.into_iter().collect();
        let results: Vec<Result<Vec<(Key, ExtScalar)>>> = groups
            .par_iter()
            .map(|(rest, firsts)| {
                let vals = self.compute_group(ws, g, n, rest, firsts)?;
                Ok(firsts
                    .iter()
                    .zip(vals)
                    .map(|(l, v)| {
                        let mut key = vec![*l];
                        key.extend_from_slice(rest);
                        key.sort_unstable();
                        (key, v)
                    })
                    .collect())
            })
            .collect();
        let mut coeffs = BTreeMap::new();
        for r in results {
            for (k, v) in r? {
                if !v.is_zero() {
                    coeffs.insert(k, v);
                }
            }
        }
        Ok(Correlator { g, n, coeffs })
    }

    /// Coefficient of `ω_{g,n}` at `key`, recomputed with the slot holding
    /// `key[slot]` as the distinguished recursion variable.  Used to test
    /// symmetry; lower correlators come from the memo table.
    pub fn coefficient_with_slot(&self, g: u32, n: usize, key: &[Label], slot: usize) -> Result<ExtScalar> {
        self.ensure_dependencies(g, n)?;
        let mut rest = key.to_vec();
        let first = rest.remove(slot);
        let mut order = default_frame_order(self.is_regular(), g, n).max(self.curve().order());
        loop {
            let ws = self.ensure_order(order)?;
            match self.compute_group(&ws, g, n, &rest, &[first]) {
                Ok(v) => return Ok(v[0].clone()),
                Err(Error::Truncation { .. }) if order < 400 => order = order * 3 / 2 + 2,
                Err(e) => return Err(e),
            }
        }
    }

    fn ensure_dependencies(&self, g: u32, n: usize) -> Result<()> {
        let mut deps: Vec<(u32, usize)> = Vec::new();
        if g >= 1 && !(g == 1 && n == 1) {
            deps.push((g - 1, n + 1));
        }
        for g1 in 0..=g {
            for n1 in 1..=n {
                if (g1, n1) != (g, n) && 2 * g1 as i64 - 2 + n1 as i64 > 0 {
                    deps.push((g1, n1));
                }
            }
        }
        deps.sort_by_key(|&(a, b)| (2 * a as i64 - 2 + b as i64, a));
        for (a, b) in deps {
            self.correlator(a, b)?;
        }
        Ok(())
    }

    fn lookup(&self, g: u32, n: usize) -> Result<Arc<Correlator>> {
        self.memo
            .read()
            .get(&(g, n))
            .cloned()
            .ok_or_else(|| Error::MissingEntry(format!("correlator ({g}, {n}) not computed")))
    }

    /// Local factor `ω_{g',|L|+1}(p, L)` at point `alpha` (coefficient of ds).
    fn factor(&self, ws: &Workspace, g: u32, spect: &[Label], alpha: usize) -> Result<LaurentSeries> {
        if g == 0 && spect.len() == 1 {
            return Ok(ws.phi[alpha]
                .get(&spect[0])
                .cloned()
                .unwrap_or_else(|| LaurentSeries::zero(ws.curve.order())));
        }
        let n1 = spect.len() + 1;
        let corr = self.lookup(g, n1)?;
        let mut acc = LaurentSeries::zero(EXACT);
        let Some(kb) = self.k_bound(g, n1) else {
            return Ok(acc);
        };
        let npts = ws.curve.num_points();
        let mut key = Vec::with_capacity(n1);
        for i in 0..npts {
            for k in 0..=kb + if self.full_support { 2 } else { 0 } {
                key.clear();
                key.push((i, k));
                key.extend_from_slice(spect);
                let c = corr.get(&key);
                if c.is_zero() {
                    continue;
                }
                if k > ws.kmax {
                    return Err(Error::Truncation {
                        have: ws.curve.order(),
                        need: 2 * k as i64 + 2,
                        context: "auxiliary index beyond workspace".into(),
                    });
                }
                let v = ws.curve.aux_expansion(i, alpha, k)?;
                acc = acc.add(&v.scale(&c));
            }
        }
        Ok(acc)
    }

    /// The integrand `W(p, p̂; J)` at point `alpha` (coefficient of ds²).
    fn integrand(&self, ws: &Workspace, g: u32, n: usize, rest: &[Label], alpha: usize) -> Result<LaurentSeries> {
        let mut w = LaurentSeries::zero(EXACT);
        if g >= 1 {
            if g == 1 && n == 1 {
                w = w.add(&ws.b_conj[alpha]);
            } else {
                let corr = self.lookup(g - 1, n + 1)?;
                if let Some(kb) = self.k_bound(g - 1, n + 1) {
                    let kb = kb + if self.full_support { 2 } else { 0 };
                    let npts = ws.curve.num_points();
                    let mut key = Vec::with_capacity(n + 1);
                    for i1 in 0..npts {
                        for k1 in 0..=kb {
                            let mut inner = LaurentSeries::zero(EXACT);
                            let mut any = false;
                            for i2 in 0..npts {
                                for k2 in 0..=kb {
                                    key.clear();
                                    key.push((i1, k1));
                                    key.push((i2, k2));
                                    key.extend_from_slice(rest);
                                    let c = corr.get(&key);
                                    if c.is_zero() {
                                        continue;
                                    }
                                    if k1.max(k2) > ws.kmax {
                                        return Err(Error::Truncation {
                                            have: ws.curve.order(),
                                            need: 2 * k1.max(k2) as i64 + 2,
                                            context: "auxiliary index beyond workspace".into(),
                                        });
                                    }
                                    any = true;
                                    let v2 = ws.curve.aux_expansion(i2, alpha, k2)?;
                                    inner = inner.add(&v2.scale(&c));
                                }
                            }
                            if any {
                                let v1 = ws.curve.aux_expansion(i1, alpha, k1)?;
                                w = w.sub(&v1.mul(&inner.reflect()));
                            }
                        }
                    }
                }
            }
        }
        let m = rest.len();
        let mut cache: HashMap<(u32, Vec<Label>), LaurentSeries> = HashMap::new();
        let mut get = |g1: u32, sub: Vec<Label>| -> Result<LaurentSeries> {
            let mut sorted = sub.clone();
            sorted.sort_unstable();
            if let Some(s) = cache.get(&(g1, sorted.clone())) {
                return Ok(s.clone());
            }
            let f = self.factor(ws, g1, &sub, alpha)?;
            cache.insert((g1, sorted), f.clone());
            Ok(f)
        };
        for g1 in 0..=g {
            let g2 = g - g1;
            for mask in 0u64..(1u64 << m) {
                let (mut i_set, mut j_set) = (Vec::new(), Vec::new());
                for (pos, l) in rest.iter().enumerate() {
                    if mask >> pos & 1 == 1 {
                        i_set.push(*l);
                    } else {
                        j_set.push(*l);
                    }
                }
                if (g1 == 0 && i_set.is_empty()) || (g2 == 0 && j_set.is_empty()) {
                    continue;
                }
                let f1 = get(g1, i_set)?;
                if f1.is_zero() && f1.order() >= EXACT {
                    continue;
                }
                let f2 = get(g2, j_set)?;
                // At p̂ the factor is f(-s) d(-s).
                w = w.sub(&f1.mul(&f2.reflect()));
            }
        }
        Ok(w)
    }

    fn compute_group(
        &self,
        ws: &Workspace,
        g: u32,
        n: usize,
        rest: &[Label],
        firsts: &[Label],
    ) -> Result<Vec<ExtScalar>> {
        let mut vals = vec![ExtScalar::zero(); firsts.len()];
        for alpha in 0..ws.curve.num_points() {
            let w = self.integrand(ws, g, n, rest, alpha)?;
            if w.is_zero() && w.order() >= EXACT {
                continue;
            }
            for (idx, l) in firsts.iter().enumerate() {
                if l.1 > ws.kmax {
                    return Err(Error::Truncation {
                        have: ws.curve.order(),
                        need: 2 * l.1 as i64 + 2,
                        context: "output index beyond workspace".into(),
                    });
                }
                let Some(kern) = ws.kernel[alpha].get(l) else {
                    continue;
                };
                let prod = kern.mul(&w);
                let r = prod.residue().map_err(|e| match e {
                    Error::Truncation { have, need, .. } => Error::Truncation {
                        have,
                        need,
                        context: format!("residue for ({g}, {n}) at point {}", alpha + 1),
                    },
                    other => other,
                })?;
                vals[idx] += &r;
            }
        }
        Ok(vals)
    }

    /// Global rational form (coefficient of dz) of `ω_{g,1}`.
    pub fn rational_form_n1(&self, g: u32) -> Result<RatFunc> {
        let c = self.correlator(g, 1)?;
        let curve = self.curve();
        let mut acc = RatFunc::zero();
        for (key, v) in &c.coeffs {
            let (i, k) = key[0];
            acc = acc.add(&curve.aux_differential(i, k)?.scale(v));
        }
        Ok(acc)
    }

    /// Rational forms in one slot, indexed by the (ordered) labels of the
    /// other slots, restricted to nonzero forms.
    pub fn slot_forms(&self, g: u32, n: usize) -> Result<BTreeMap<Key, RatFunc>> {
        let c = self.correlator(g, n)?;
        let curve = self.curve();
        let mut out: BTreeMap<Key, RatFunc> = BTreeMap::new();
        for (key, v) in &c.coeffs {
            // Every distinct choice of the distinguished slot label.
            let mut seen = std::collections::BTreeSet::new();
            for pos in 0..key.len() {
                if !seen.insert(key[pos]) {
                    continue;
                }
                let mut rest = key.clone();
                let first = rest.remove(pos);
                for perm in distinct_permutations(&rest) {
                    let e = out.entry(perm).or_insert_with(RatFunc::zero);
                    *e = e.add(&curve.aux_differential(first.0, first.1)?.scale(v));
                }
            }
        }
        out.retain(|_, f| !f.is_zero());
        Ok(out)
    }

    /// Iterated `Res_{z=∞} ∏ z_i^{m_i} ω_{g,n}`.
    pub fn residue_pairing(&self, g: u32, n: usize, powers: &[i64]) -> Result<ExtScalar> {
        if powers.len() != n {
            return Err(Error::Invalid("one power per slot is required".into()));
        }
        let c = self.correlator(g, n)?;
        residue_pairing_of(&self.curve(), &c.coeffs, powers)
    }

    /// Vanishing orders at `z = ∞`.  The per-slot entries are the order in
    /// one variable with the others generic (all equal by symmetry).  The
    /// second component is the joint order: over a common denominator
    /// `∏ L(z_i)` it equals `n deg L - 2n - deg p` with `p` the numerator
    /// polynomial in all variables.  `None` for the zero correlator.
    pub fn ord_infinity(&self, g: u32, n: usize) -> Result<Option<(Vec<i64>, i64)>> {
        let forms = self.slot_forms(g, n)?;
        let slot = forms
            .values()
            .filter_map(|f| {
                let num = f.num().degree()? as i64;
                let den = f.den().degree().unwrap_or(0) as i64;
                Some(den - num - 2)
            })
            .min();
        let Some(slot) = slot else {
            return Ok(None);
        };
        let c = self.correlator(g, n)?;
        let curve = self.curve();
        let mut labels: Vec<Label> = c.coeffs.keys().flatten().copied().collect();
        labels.sort_unstable();
        labels.dedup();
        let mut lcm = Poly::one();
        for &(i, k) in &labels {
            let den = curve.aux_differential(i, k)?.den().clone();
            let gcd = lcm.gcd(&den)?;
            lcm = lcm.mul(&den.div_rem(&gcd)?.0);
        }
        let mut numerators = HashMap::new();
        for &(i, k) in &labels {
            let v = curve.aux_differential(i, k)?;
            let cofactor = lcm.div_rem(v.den())?.0;
            numerators.insert((i, k), v.num().mul(&cofactor));
        }
        // Numerator of the joint form, keyed by exponent vector.
        let mut joint: BTreeMap<Vec<usize>, ExtScalar> = BTreeMap::new();
        for (key, v) in &c.coeffs {
            for perm in distinct_permutations(key) {
                let mut terms: Vec<(Vec<usize>, ExtScalar)> = vec![(Vec::new(), v.clone())];
                for l in &perm {
                    let poly = &numerators[l];
                    let mut next = Vec::new();
                    for (exps, coeff) in &terms {
                        for (d, a) in poly.coeffs().iter().enumerate() {
                            if a.is_zero() {
                                continue;
                            }
                            let mut e = exps.clone();
                            e.push(d);
                            next.push((e, coeff * a));
                        }
                    }
                    terms = next;
                }
                for (e, a) in terms {
                    *joint.entry(e).or_insert_with(ExtScalar::zero) += &a;
                }
            }
        }
        let total_degree = joint
            .iter()
            .filter(|(_, a)| !a.is_zero())
            .map(|(e, _)| e.iter().sum::<usize>() as i64)
            .max();
        let Some(total_degree) = total_degree else {
            return Ok(None);
        };
        let deg_l = lcm.degree().unwrap_or(0) as i64;
        let n = n as i64;
        Ok(Some((vec![slot; n as usize], n * deg_l - 2 * n - total_degree)))
    }

    /// `ρ(i, k) = Σ_α Res_{p=α} Φ(p) V^i_k(p)` with `dΦ = y dx`.
    fn phi_pairing(&self) -> Result<HashMap<Label, ExtScalar>> {
        let curve = self.curve();
        let phi = curve.ydx_primitive()?;
        let order = curve.order();
        let mut out = HashMap::new();
        let mut phis = Vec::new();
        for (alpha, p) in curve.points.iter().enumerate() {
            let fr = &curve.frames[alpha];
            let num = phi.num().shift(&p.z).eval_series(&fr.zeta)?;
            let den = phi.den().shift(&p.z).eval_series(&fr.zeta)?;
            let vn = num.valuation().unwrap_or(0);
            phis.push(num.mul(&den.inv_to(order - vn)?).truncate(order));
        }
        let kmax = ((order - 2) / 2) as usize;
        for i in 0..curve.num_points() {
            for k in 0..=kmax {
                let mut acc = ExtScalar::zero();
                for (alpha, ph) in phis.iter().enumerate() {
                    let v = curve.aux_expansion(i, alpha, k)?;
                    acc += &v.mul(ph).residue()?;
                }
                out.insert((i, k), acc);
            }
        }
        Ok(out)
    }

    /// `F_g = Σ_α Res_{p=α} Φ(p) ω_{g,1}(p)`.
    pub fn symplectic_fg(&self, g: u32) -> Result<ExtScalar> {
        let c = self.correlator(g, 1)?;
        let rho = self.phi_pairing()?;
        let mut total = ExtScalar::zero();
        for (key, v) in &c.coeffs {
            let r = rho.get(&key[0]).ok_or_else(|| Error::Truncation {
                have: self.curve().order(),
                need: 2 * key[0].1 as i64 + 2,
                context: "Φ pairing".into(),
            })?;
            total += &(v * r);
        }
        Ok(total)
    }

    /// Checks `Σ_α Res Φ ω_{g,n+1}(·, J) = (2g - 2 + n) ω_{g,n}(J)` for every
    /// multi-index J in the support bound of `ω_{g,n}`.
    pub fn dilaton_check(&self, g: u32, n: usize) -> Result<bool> {
        let big = self.correlator(g, n + 1)?;
        let small = self.correlator(g, n)?;
        let kb = self.k_bound(g, n + 1).unwrap_or(0);
        let need = default_frame_order(self.is_regular(), g, n + 1).max(2 * kb as i64 + 12);
        self.ensure_order(need)?;
        let rho = self.phi_pairing()?;
        let factor = qi(2 * g as i64 - 2 + n as i64);
        let npts = self.curve().num_points();
        let kb_small = self.k_bound(g, n).unwrap_or(0);
        for key in enumerate_keys(npts, n, kb_small, kb_small.max(kb)) {
            let mut lhs = ExtScalar::zero();
            for (l, r) in &rho {
                if r.is_zero() || l.1 > kb {
                    continue;
                }
                let mut full = key.clone();
                full.push(*l);
                lhs += &(&big.get(&full) * r);
            }
            if lhs != small.get(&key).scale(&factor) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// True when every stored label obeys the pole-order bound.
    pub fn pole_order_ok(&self, g: u32, n: usize) -> Result<bool> {
        let c = self.correlator(g, n)?;
        let curve = self.curve();
        for key in c.coeffs.keys() {
            for &(i, k) in key {
                let bound = match curve.points[i].kind {
                    PointKind::Regular => 6 * g as i64 - 4 + 2 * n as i64,
                    PointKind::Irregular => 2 * g as i64,
                };
                if 2 * k as i64 + 2 > bound {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Iterated `Res_{z=∞} ∏ z_i^{m_i}` applied to `Σ c_K ∏ V_{K_i}(z_i)`, where
/// `coeffs` maps sorted keys to the coefficient of every ordering.
pub fn residue_pairing_of(
    curve: &AnalyzedCurve,
    coeffs: &BTreeMap<Key, ExtScalar>,
    powers: &[i64],
) -> Result<ExtScalar> {
    let mut cache: HashMap<(i64, Label), ExtScalar> = HashMap::new();
    let mut r = |m: i64, l: Label| -> Result<ExtScalar> {
        if let Some(v) = cache.get(&(m, l)) {
            return Ok(v.clone());
        }
        let f = curve.aux_differential(l.0, l.1)?;
        let e = f.expand_at_infinity(m + 1)?;
        let v = -e.coeff(m + 1)?;
        cache.insert((m, l), v.clone());
        Ok(v)
    };
    let mut total = ExtScalar::zero();
    for (key, v) in coeffs {
        if key.len() != powers.len() {
            return Err(Error::Invalid("one power per slot is required".into()));
        }
        for perm in distinct_permutations(key) {
            let mut prod = v.clone();
            for (slot, l) in perm.iter().enumerate() {
                prod = &prod * &r(powers[slot], *l)?;
                if prod.is_zero() {
                    break;
                }
            }
            total += &prod;
        }
    }
    Ok(total)
}

/// All distinct orderings of a multiset of labels.
pub fn distinct_permutations(items: &[Label]) -> Vec<Key> {
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    let mut out = vec![sorted.clone()];
    // Next-permutation enumeration visits each distinct ordering once.
    loop {
        let n = sorted.len();
        if n < 2 {
            break;
        }
        let mut i = n - 1;
        while i > 0 && sorted[i - 1] >= sorted[i] {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let mut j = n - 1;
        while sorted[j] <= sorted[i - 1] {
            j -= 1;
        }
        sorted.swap(i - 1, j);
        sorted[i..].reverse();
        out.push(sorted.clone());
    }
    out
}

/// Plain text for the Cauchy kernel `ω_{0,2}`.
pub const CAUCHY_KERNEL_TEXT: &str = "dz1*dz2/(z1 - z2)^2";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::odd_double_factorial;
    use crate::exact::Rational;

    #[test]
    fn airy_one_one() {
        let e = Engine::new(SpectralCurve::airy()).unwrap();
        let c = e.correlator(1, 1).unwrap();
        assert_eq!(c.get(&[(0, 1)]), ExtScalar::frac(1, 24));
        assert_eq!(c.coeffs.len(), 1);
        let f = e.rational_form_n1(1).unwrap();
        assert_eq!(f.num().coeff(0), ExtScalar::frac(1, 8));
        assert_eq!(f.den().degree(), Some(4));
    }

    #[test]
    fn airy_genus_zero_three() {
        let e = Engine::new(SpectralCurve::airy()).unwrap();
        let c = e.correlator(0, 3).unwrap();
        assert_eq!(c.get(&[(0, 0), (0, 0), (0, 0)]), ExtScalar::one());
    }

    #[test]
    fn bessel_one_one() {
        let e = Engine::new(SpectralCurve::bessel()).unwrap();
        let c = e.correlator(1, 1).unwrap();
        assert_eq!(c.get(&[(0, 0)]), ExtScalar::frac(1, 8));
        assert!(e.correlator(0, 3).unwrap().is_zero());
    }

    #[test]
    fn permutations() {
        let p = distinct_permutations(&[(0, 1), (0, 0), (0, 1)]);
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn key_enumeration_counts() {
        // Multisets of size 2 over {0,1,2} with sum <= 2: 00 01 02 11.
        assert_eq!(enumerate_keys(1, 2, 2, 2).len(), 4);
        let _ = Rational::from_integer(odd_double_factorial(2));
    }
}
