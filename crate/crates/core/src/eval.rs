//! Ranking metrics: average precision, exact-position and set-based P@k/R@k
//! curves, paired t-tests, and length-stratified mAP.
//!
//! The two P/R variants answer different questions. The exact-position
//! variant counts a hit only when the fact predicted at position i is the
//! gold fact annotated at position i, which scores the ordering of the
//! explanation; the set variant counts membership of gold facts in the top k,
//! which scores retrieval. Reports carry both, labeled.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// AP of a full-store ranking against an unordered gold set.
pub fn average_precision(ranked: &[&str], gold: &HashSet<&str>) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::Eval("average precision needs a non-empty gold set".into()));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (pos, fact_id) in ranked.iter().enumerate() {
        if gold.contains(fact_id) {
            hits += 1;
            sum += hits as f64 / (pos + 1) as f64;
        }
    }
    Ok(sum / gold.len() as f64)
}

/// Unweighted mean of per-instance APs.
pub fn mean_ap(aps: &[f64]) -> Result<f64> {
    if aps.is_empty() {
        return Err(Error::Eval("mean AP needs at least one instance".into()));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Exact-position precision/recall at k: a hit at position i (1-based,
/// i <= min(k, |gold|)) requires ranked[i] to equal the gold fact annotated
/// at position i.
pub fn pr_at_k_exact(ranked: &[&str], gold_ordered: &[&str], k: usize) -> (f64, f64) {
    assert!(k >= 1, "k must be at least 1");
    if gold_ordered.is_empty() {
        return (0.0, 0.0);
    }
    let upto = k.min(gold_ordered.len()).min(ranked.len());
    let hits = (0..upto).filter(|&i| ranked[i] == gold_ordered[i]).count();
    (hits as f64 / k as f64, hits as f64 / gold_ordered.len() as f64)
}

/// Set-based precision/recall at k: hits are gold facts anywhere in the
/// top k.
pub fn pr_at_k_set(ranked: &[&str], gold: &HashSet<&str>, k: usize) -> (f64, f64) {
    assert!(k >= 1, "k must be at least 1");
    if gold.is_empty() {
        return (0.0, 0.0);
    }
    let hits = ranked.iter().take(k).filter(|id| gold.contains(*id)).count();
    (hits as f64 / k as f64, hits as f64 / gold.len() as f64)
}

/// The k grid used by every curve: 2, 4, ..., 50.
pub fn k_grid() -> Vec<usize> {
    (1..=25).map(|i| 2 * i).collect()
}

/// Two-sided paired t-test over per-instance score pairs.
///
/// Zero-variance differences are an error when the mean difference is also
/// zero (the test is undefined); with a nonzero mean the statistic is
/// reported as infinite with p = 0.
pub fn paired_t_test(scores_a: &[f64], scores_b: &[f64]) -> Result<(f64, f64)> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::Eval("paired t-test needs equal-length score lists".into()));
    }
    let n = scores_a.len();
    if n < 2 {
        return Err(Error::Eval("paired t-test needs at least 2 instances".into()));
    }
    let diffs: Vec<f64> = scores_a.iter().zip(scores_b).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    // Treat variance at rounding-noise level as zero so a constant shift hits
    // the infinite-t guard instead of producing an astronomically large t.
    if var <= mean * mean * 1e-24 {
        if mean == 0.0 {
            return Err(Error::Eval("paired t-test undefined: zero variance and zero mean".into()));
        }
        return Ok((mean.signum() * f64::INFINITY, 0.0));
    }
    let t = mean / (var / n as f64).sqrt();
    let dof = (n - 1) as f64;
    let p = 2.0 * student_t_sf(t.abs(), dof);
    Ok((t, p))
}

/// P(T > t) for Student's t with `dof` degrees of freedom, via the
/// regularized incomplete beta function.
pub fn student_t_sf(t: f64, dof: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 0.0 } else { 1.0 };
    }
    let x = dof / (dof + t * t);
    0.5 * incomplete_beta(0.5 * dof, 0.5, x)
}

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    // The continued fraction converges fast for x < (a + 1) / (a + b + 2);
    // use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) otherwise.
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - incomplete_beta(b, a, 1.0 - x)
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Lanczos approximation of ln Gamma.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for c in COEFFS {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// One evaluated instance: its ranking plus the annotated gold order.
pub struct EvalInstance<'a> {
    pub qa_id: &'a str,
    pub ranked: Vec<&'a str>,
    pub gold_ordered: Vec<&'a str>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub precision_exact: f64,
    pub recall_exact: f64,
    pub precision_set: f64,
    pub recall_set: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_instance_ap: Vec<(String, f64)>,
    pub map: f64,
    /// Mean P/R over instances at each k in the grid, both variants.
    pub curves: Vec<CurvePoint>,
    /// gold explanation length -> (instances, mAP)
    pub map_by_length: BTreeMap<usize, (usize, f64)>,
}

impl EvalReport {
    pub fn build(instances: &[EvalInstance<'_>]) -> Result<EvalReport> {
        if instances.is_empty() {
            return Err(Error::Eval("evaluation needs at least one instance".into()));
        }
        let mut per_instance_ap = Vec::with_capacity(instances.len());
        let mut by_length: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for inst in instances {
            let gold_set: HashSet<&str> = inst.gold_ordered.iter().copied().collect();
            let ap = average_precision(&inst.ranked, &gold_set)?;
            per_instance_ap.push((inst.qa_id.to_string(), ap));
            by_length.entry(inst.gold_ordered.len()).or_default().push(ap);
        }
        let aps: Vec<f64> = per_instance_ap.iter().map(|(_, ap)| *ap).collect();
        let map = mean_ap(&aps)?;

        let mut curves = Vec::new();
        for k in k_grid() {
            let mut sums = (0.0, 0.0, 0.0, 0.0);
            for inst in instances {
                let gold_set: HashSet<&str> = inst.gold_ordered.iter().copied().collect();
                let (pe, re) = pr_at_k_exact(&inst.ranked, &inst.gold_ordered, k);
                let (ps, rs) = pr_at_k_set(&inst.ranked, &gold_set, k);
                sums.0 += pe;
                sums.1 += re;
                sums.2 += ps;
                sums.3 += rs;
            }
            let n = instances.len() as f64;
            curves.push(CurvePoint {
                k,
                precision_exact: sums.0 / n,
                recall_exact: sums.1 / n,
                precision_set: sums.2 / n,
                recall_set: sums.3 / n,
            });
        }

        let map_by_length = by_length
            .into_iter()
            .map(|(len, aps)| {
                let m = aps.iter().sum::<f64>() / aps.len() as f64;
                (len, (aps.len(), m))
            })
            .collect();

        Ok(EvalReport { per_instance_ap, map, curves, map_by_length })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// CSV rows for the P/R curves: k, then both variants.
    pub fn curves_csv(&self) -> String {
        let mut out =
            String::from("k,precision_exact,recall_exact,precision_set,recall_set\n");
        for p in &self.curves {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6}\n",
                p.k, p.precision_exact, p.recall_exact, p.precision_set, p.recall_set
            ));
        }
        out
    }

    /// CSV rows for length-stratified mAP.
    pub fn map_by_length_csv(&self) -> String {
        let mut out = String::from("explanation_length,instances,map\n");
        for (len, (count, m)) in &self.map_by_length {
            out.push_str(&format!("{len},{count},{m:.6}\n"));
        }
        out
    }
}
