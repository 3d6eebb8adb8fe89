//! Θ intersection numbers `∫Θ_{g,n} ∏ψ^{k} ∏κ_ℓ` from either pipeline:
//! the Bessel curve's recursion table, or the relations table solved from
//! the shipped tautological relations.

use std::sync::Arc;

use num_traits::Zero;
use parking_lot::Mutex;
use serde_json::{json, Value};

use crate::curve::SpectralCurve;
use crate::error::{Error, Result};
use crate::exact::{factorial, fmt_rational, q, ExtScalar, Rational};
use crate::graphs::relations::{
    dilaton_reduce, evaluate_terms, fixtures, kappa_to_psi, solve_theta, LambdaTable, ThetaOracle,
};
use crate::recursion::Engine;
use crate::series::Poly;
use crate::tau::{assemble, Provenance, SelectionRule, TauTable};

/// Source of the ψ-only values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pipeline {
    Bessel,
    Relations,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bessel => "bessel",
            Self::Relations => "relations",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bessel" => Ok(Self::Bessel),
            "relations" => Ok(Self::Relations),
            other => Err(Error::Parse(format!(
                "unknown pipeline {other:?}; expected bessel or relations"
            ))),
        }
    }
}

/// `∫Θ_{g,n} ∏ψ_i^{k_i} ∏κ_{ℓ_j}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaQuery {
    pub g: u32,
    pub psi: Vec<u32>,
    pub kappa: Vec<u32>,
}

impl ThetaQuery {
    pub fn new(g: u32, psi: Vec<u32>, kappa: Vec<u32>) -> Result<Self> {
        let n = psi.len();
        if 2 * g as i64 - 2 + n as i64 <= 0 {
            return Err(Error::Unstable { g, n });
        }
        Ok(Self { g, psi, kappa })
    }

    pub fn n(&self) -> usize {
        self.psi.len()
    }

    /// `Σk + Σℓ`.
    pub fn degree(&self) -> u32 {
        self.psi.iter().sum::<u32>() + self.kappa.iter().sum::<u32>()
    }
}

/// Record of the dimension constraint `Σk + Σℓ = g - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimensionCheck {
    pub degree: u32,
    pub required: i64,
    pub satisfied: bool,
}

/// Value of a query with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaAnswer {
    pub value: Rational,
    pub pipeline: Pipeline,
    pub dimension: DimensionCheck,
    /// Why the value vanishes without a lookup, if it does.
    pub reason: Option<String>,
}

impl ThetaAnswer {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "value": fmt_rational(&self.value),
            "pipeline": self.pipeline.name(),
            "dimension": {
                "degree": self.dimension.degree,
                "required": self.dimension.required,
                "satisfied": self.dimension.satisfied,
            },
        });
        if let Some(r) = &self.reason {
            v["reason"] = json!(r);
        }
        v
    }
}

/// Relations-pipeline table for general `λ = 24 ∫Θ_{1,1}`: genus one from
/// the initial condition, then the genus-two Mumford relation and the two
/// genus-three relations, each solved for its single unknown.
pub fn relations_table() -> Result<LambdaTable> {
    let mut t = LambdaTable::genus_one();
    solve_theta(&fixtures::mumford()?, 2, &[1], &mut t)?;
    solve_theta(&fixtures::genus_three_psi_cubed()?, 3, &[2], &mut t)?;
    solve_theta(&fixtures::genus_three_mixed()?, 3, &[1, 1], &mut t)?;
    Ok(t)
}

/// The value of `λ` matching the Bessel curve.
pub fn bessel_lambda() -> Rational {
    q(3, 1)
}

/// Query service over both pipelines.
pub struct ThetaService {
    engine: Arc<Engine>,
    bessel: Mutex<TauTable>,
    relations: LambdaTable,
    auto_extend: bool,
}

impl std::fmt::Debug for ThetaService {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ThetaService")
            .field("auto_extend", &self.auto_extend)
            .finish_non_exhaustive()
    }
}

/// Bessel table seen through dilaton reduction, extended on demand.
struct BesselOracle<'a>(&'a ThetaService);

impl ThetaOracle for BesselOracle<'_> {
    fn theta(&self, g: u32, ks: &[u32]) -> Result<Poly> {
        self.0
            .bessel_value(g, ks)
            .map(|r| Poly::constant(ExtScalar::from_rational(r)))
    }
}

/// Relations table specialized at `λ = 3`.
struct RelationsOracle<'a>(&'a LambdaTable);

impl ThetaOracle for RelationsOracle<'_> {
    fn theta(&self, g: u32, ks: &[u32]) -> Result<Poly> {
        let v = self.0.specialize(g, ks, &bessel_lambda())?;
        Ok(Poly::constant(ExtScalar::from_rational(v)))
    }
}

impl ThetaService {
    /// Service over the shared Bessel engine with a table through
    /// `g <= g_max` (reduced types only; larger `n` follows from dilaton).
    pub fn new(g_max: u32, auto_extend: bool) -> Result<Self> {
        Self::with_engine(Engine::shared("bessel")?, g_max, auto_extend)
    }

    pub fn with_engine(engine: Arc<Engine>, g_max: u32, auto_extend: bool) -> Result<Self> {
        if engine.spectral_curve().x != SpectralCurve::bessel().x
            || engine.spectral_curve().y != SpectralCurve::bessel().y
        {
            return Err(Error::Invalid("the Θ service needs the Bessel curve".into()));
        }
        let n_max = g_max.max(1) as usize;
        let table = assemble(&engine, g_max, n_max, Provenance::Bessel)?;
        Ok(Self {
            engine,
            bessel: Mutex::new(table),
            relations: relations_table()?,
            auto_extend,
        })
    }

    /// The relations table (λ-generic).
    pub fn relations(&self) -> &LambdaTable {
        &self.relations
    }

    /// Snapshot of the Bessel table.
    pub fn bessel_table(&self) -> TauTable {
        self.bessel.lock().clone()
    }

    fn bessel_value(&self, g: u32, ks: &[u32]) -> Result<Rational> {
        if g == 0 || !SelectionRule::BrezinGrossWitten.allows(g, ks) {
            return Ok(Rational::zero());
        }
        let (key, factor) = dilaton_reduce(g, ks);
        let mut table = self.bessel.lock();
        if !table.is_complete(g, key.len()) {
            if !self.auto_extend {
                return Err(Error::MissingEntry(format!(
                    "Bessel table lacks ({g}, {key:?}) and auto-extension is off"
                )));
            }
            for n in 1..=key.len() {
                if table.is_complete(g, n) {
                    continue;
                }
                let c = self.engine.correlator(g, n)?;
                for (k, v) in &c.coeffs {
                    let idx: Vec<u32> = k.iter().map(|l| l.1 as u32).collect();
                    let r = v
                        .to_rational()
                        .ok_or_else(|| Error::Invalid("non-rational Bessel coefficient".into()))?;
                    table.insert(g, &idx, r)?;
                }
                table.mark_complete(g, n);
            }
        }
        Ok(table.require(g, &key)? * factor)
    }

    fn dimension(query: &ThetaQuery) -> DimensionCheck {
        let required = query.g as i64 - 1;
        DimensionCheck {
            degree: query.degree(),
            required,
            satisfied: query.degree() as i64 == required,
        }
    }

    /// Answers a query from the chosen pipeline.
    pub fn theta(&self, query: &ThetaQuery, pipeline: Pipeline) -> Result<ThetaAnswer> {
        let dimension = Self::dimension(query);
        let vanish = |reason: &str| ThetaAnswer {
            value: Rational::zero(),
            pipeline,
            dimension: dimension.clone(),
            reason: Some(reason.to_owned()),
        };
        if query.g == 0 {
            return Ok(vanish("Θ vanishes in genus zero"));
        }
        if !dimension.satisfied {
            return Ok(vanish("degree differs from g - 1"));
        }
        let value = match pipeline {
            Pipeline::Bessel => kappa_to_psi(query.g, &query.psi, &query.kappa, &BesselOracle(self))?,
            Pipeline::Relations => kappa_to_psi(query.g, &query.psi, &query.kappa, &RelationsOracle(&self.relations))?,
        };
        let value = value
            .coeff(0)
            .to_rational()
            .ok_or_else(|| Error::Invalid("non-rational Θ value".into()))?;
        Ok(ThetaAnswer {
            value,
            pipeline,
            dimension,
            reason: None,
        })
    }

    /// The query as a polynomial in `λ`; only the relations pipeline
    /// carries `λ`.
    pub fn theta_lambda_generic(&self, query: &ThetaQuery, pipeline: Pipeline) -> Result<Poly> {
        if pipeline != Pipeline::Relations {
            return Err(Error::Invalid(
                "λ-generic values come from the relations pipeline only".into(),
            ));
        }
        if query.g == 0 || !Self::dimension(query).satisfied {
            return Ok(Poly::zero());
        }
        kappa_to_psi(query.g, &query.psi, &query.kappa, &self.relations)
    }

    /// `∫Θ_{1,n}` for `n = 1..=n_max`.
    pub fn theta_one_table(&self, n_max: usize, pipeline: Pipeline) -> Result<Vec<(usize, Rational)>> {
        (1..=n_max)
            .map(|n| {
                let query = ThetaQuery::new(1, vec![0; n], Vec::new())?;
                Ok((n, self.theta(&query, pipeline)?.value))
            })
            .collect()
    }

    /// `∫Θ_{g,n} κ₁^{g-1}`, the rational part of the Θ Weil-Petersson
    /// volume `(2π²)^{g-1}/(g-1)! · ∫Θ_{g,n} κ₁^{g-1}`.
    pub fn wp_volume_coefficient(&self, g: u32, n: usize, pipeline: Pipeline) -> Result<Rational> {
        if g == 0 {
            return Err(Error::Invalid("the Θ volume needs g >= 1".into()));
        }
        let query = ThetaQuery::new(g, vec![0; n], vec![1; g as usize - 1])?;
        Ok(self.theta(&query, pipeline)?.value)
    }

    /// ∫Θ₂λ₁ from the λ₁ boundary expression.
    pub fn lambda_one_genus_two(&self, pipeline: Pipeline) -> Result<Rational> {
        let rel = fixtures::lambda_one()?;
        let v = match pipeline {
            Pipeline::Bessel => evaluate_terms(&rel, None, &BesselOracle(self))?,
            Pipeline::Relations => evaluate_terms(&rel, None, &RelationsOracle(&self.relations))?,
        };
        v.coeff(0)
            .to_rational()
            .ok_or_else(|| Error::Invalid("non-rational value".into()))
    }

    /// Evaluates any relation or boundary expression against a pipeline.
    pub fn evaluate(
        &self,
        rel: &crate::graphs::relations::TautRelation,
        role: Option<&str>,
        pipeline: Pipeline,
    ) -> Result<Rational> {
        let v = match pipeline {
            Pipeline::Bessel => evaluate_terms(rel, role, &BesselOracle(self))?,
            Pipeline::Relations => evaluate_terms(rel, role, &RelationsOracle(&self.relations))?,
        };
        v.coeff(0)
            .to_rational()
            .ok_or_else(|| Error::Invalid("non-rational value".into()))
    }

    /// Compares every entry of the Bessel table assembled directly from
    /// the recursion (no dilaton reduction) with the relations table, for
    /// `g <= g_max` and `n <= n_max`; returns the first disagreement.
    pub fn cross_pipeline(&self, g_max: u32, n_max: usize) -> Result<Option<(u32, Vec<u32>)>> {
        let table = assemble(&self.engine, g_max, n_max, Provenance::Bessel)?;
        cross_check(&table, &self.relations, g_max, n_max)
    }
}

/// First entry with `1 <= g <= g_max`, `n <= n_max` where `table` and the
/// relations table at `λ = 3` differ.
pub fn cross_check(
    table: &TauTable,
    relations: &LambdaTable,
    g_max: u32,
    n_max: usize,
) -> Result<Option<(u32, Vec<u32>)>> {
    for g in 1..=g_max {
        for n in 1..=n_max {
            if !table.is_complete(g, n) {
                return Err(Error::MissingEntry(format!("Bessel table type ({g}, {n})")));
            }
            for ks in partitions_with_zeros(g - 1, n) {
                let a = table.require(g, &ks)?;
                let b = relations.specialize(g, &ks, &bessel_lambda())?;
                if a != b {
                    return Ok(Some((g, ks)));
                }
            }
        }
    }
    Ok(None)
}

/// Non-decreasing sequences of length `n` summing to `total`.
pub fn partitions_with_zeros(total: u32, n: usize) -> Vec<Vec<u32>> {
    fn rec(left: u32, slots: usize, min: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for x in min..=left {
            cur.push(x);
            rec(left - x, slots - 1, x, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, n, 0, &mut Vec::new(), &mut out);
    out
}

/// `(n-1)!/8`, the closed form of `∫Θ_{1,n}`.
pub fn theta_one_closed_form(n: usize) -> Rational {
    Rational::from_integer(factorial(n as u64 - 1)) / Rational::from_integer(8.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn queries_from_both_pipelines() {
        let s = ThetaService::new(3, true).unwrap();
        for p in [Pipeline::Bessel, Pipeline::Relations] {
            let a = s.theta(&ThetaQuery::new(3, vec![1, 1], vec![]).unwrap(), p).unwrap();
            assert_eq!(a.value, q(63, 512));
            let a = s.theta(&ThetaQuery::new(2, vec![], vec![1]).unwrap(), p).unwrap();
            assert_eq!(a.value, q(3, 128));
            // κ₁ = π*κ₁ + ψ₁ on M̄_{2,1}: 2·(3/128) + 3/128.
            let a = s.theta(&ThetaQuery::new(2, vec![0], vec![1]).unwrap(), p).unwrap();
            assert_eq!(a.value, q(9, 128));
            assert_eq!(s.wp_volume_coefficient(2, 0, p).unwrap(), q(3, 128));
            assert_eq!(s.lambda_one_genus_two(p).unwrap(), q(1, 128));
        }
        assert_eq!(s.cross_pipeline(3, 6).unwrap(), None);
    }

    #[test]
    fn genus_one_closed_form() {
        let s = ThetaService::new(1, true).unwrap();
        for (n, v) in s.theta_one_table(6, Pipeline::Bessel).unwrap() {
            assert_eq!(v, theta_one_closed_form(n));
        }
    }

    #[test]
    fn lambda_generic_genus_two() {
        let s = ThetaService::new(2, true).unwrap();
        let query = ThetaQuery::new(2, vec![], vec![1]).unwrap();
        let p = s.theta_lambda_generic(&query, Pipeline::Relations).unwrap();
        assert_eq!(
            p,
            Poly::new(vec![
                ExtScalar::zero(),
                ExtScalar::frac(24, 5760),
                ExtScalar::frac(7, 5760)
            ])
        );
        assert!(s.theta_lambda_generic(&query, Pipeline::Bessel).is_err());
    }

    #[test]
    fn no_extension_reports_missing() {
        let s = ThetaService::new(1, false).unwrap();
        let query = ThetaQuery::new(3, vec![2], vec![]).unwrap();
        assert!(matches!(s.theta(&query, Pipeline::Bessel), Err(Error::MissingEntry(_))));
    }
}
