//! Takeover screening for strategic companies.
//!
//! A scenario names strategic companies `S`, foreign entities `F` and public
//! entities `P`. The checks decide whether a proposed transaction lets `F`
//! (alone, jointly, or under a worst-case reading of missing data) control a
//! member of `S`; the limit and protection tasks search for safe share levels.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::control::{control_closure, ControlClosure, Controller};
use crate::error::{Error, Result};
use crate::graph::{apply_all, apply_transaction, Edge, OwnershipGraph, Transaction};
use crate::scalar::{serde_share, Share};

pub const DEFAULT_LIMIT_QUANTUM: f64 = 1e-4;
pub const DEFAULT_PROTECTION_QUANTUM: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""), default)]
pub struct Scenario<S: Share = f64> {
    pub strategic: BTreeSet<String>,
    pub foreign: BTreeSet<String>,
    pub public: BTreeSet<String>,
    pub staged: Vec<Transaction<S>>,
}

impl<S: Share> Default for Scenario<S> {
    fn default() -> Self {
        Scenario {
            strategic: BTreeSet::new(),
            foreign: BTreeSet::new(),
            public: BTreeSet::new(),
            staged: Vec::new(),
        }
    }
}

impl<S: Share> Scenario<S> {
    /// Sets taken from the entity flags of `g`, with nothing staged.
    pub fn from_flags(g: &OwnershipGraph<S>) -> Self {
        let pick = |f: fn(&crate::graph::Entity) -> bool| {
            g.entities().iter().filter(|e| f(e)).map(|e| e.id.clone()).collect()
        };
        Scenario {
            strategic: pick(|e| e.strategic && e.is_company()),
            foreign: pick(|e| e.foreign),
            public: pick(|e| e.public),
            staged: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self, g: &OwnershipGraph<S>) -> Result<()> {
        for id in &self.strategic {
            if !g.contains(id) {
                return Err(Error::UnknownEntity { id: id.clone() });
            }
            if !g.is_company(g.require(id)?) {
                return Err(Error::InvalidScenario(format!("strategic {id} is not a company")));
            }
        }
        for id in self.foreign.iter().chain(&self.public) {
            g.require(id)?;
        }
        if let Some(id) = self.public.iter().find(|p| self.foreign.contains(*p) || self.strategic.contains(*p)) {
            return Err(Error::InvalidScenario(format!(
                "public {id} must not be foreign or strategic"
            )));
        }
        Ok(())
    }

    /// `g` after the staged transactions, in order.
    pub fn staged_graph(&self, g: &OwnershipGraph<S>) -> Result<OwnershipGraph<S>> {
        self.validate(g)?;
        apply_all(g, &self.staged)
    }

    fn indices(&self, g: &OwnershipGraph<S>, ids: &BTreeSet<String>) -> Result<Vec<usize>> {
        ids.iter().map(|id| g.require(id)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct Witness<S: Share = f64> {
    pub foreign: Controller,
    pub strategic: String,
    #[serde(with = "serde_share")]
    pub control_share: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct GpVerdict<S: Share = f64> {
    pub takeover: bool,
    /// Strategic companies controlled from `F`.
    pub witnesses: Vec<Witness<S>>,
    /// Every positive control share of `F` on a strategic company.
    pub exposure: Vec<Witness<S>>,
    #[serde(skip)]
    pub graph_after: OwnershipGraph<S>,
}

fn screen<S: Share>(
    g: OwnershipGraph<S>,
    strategic: &[usize],
    controllers: &[Vec<usize>],
) -> GpVerdict<S> {
    let mut witnesses = Vec::new();
    let mut exposure = Vec::new();
    for seeds in controllers {
        let closure = control_closure(&g, seeds);
        let foreign = Controller::from_ids(closure.seeds.iter().map(|&i| g.id(i)));
        let controlled: BTreeSet<usize> = closure.controlled.iter().copied().collect();
        for &s in strategic {
            let share = closure.share(s);
            if share <= S::zero() {
                continue;
            }
            let w = Witness {
                foreign: foreign.clone(),
                strategic: g.id(s).to_string(),
                control_share: share,
            };
            if controlled.contains(&s) {
                witnesses.push(w.clone());
            }
            exposure.push(w);
        }
    }
    GpVerdict {
        takeover: !witnesses.is_empty(),
        witnesses,
        exposure,
        graph_after: g,
    }
}

fn check_after<S: Share>(g: OwnershipGraph<S>, sc: &Scenario<S>, jointly: bool) -> Result<GpVerdict<S>> {
    let strategic = sc.indices(&g, &sc.strategic)?;
    let foreign = sc.indices(&g, &sc.foreign)?;
    let controllers = if jointly {
        if foreign.is_empty() {
            Vec::new()
        } else {
            vec![foreign]
        }
    } else {
        foreign.into_iter().map(|f| vec![f]).collect()
    };
    Ok(screen(g, &strategic, &controllers))
}

/// Does `t`, after the staged transactions, give some member of `F` control
/// of a strategic company?
pub fn gp_check<S: Share>(g: &OwnershipGraph<S>, sc: &Scenario<S>, t: &Transaction<S>) -> Result<GpVerdict<S>> {
    let after = apply_transaction(&sc.staged_graph(g)?, t)?;
    check_after(after, sc, false)
}

/// As [`gp_check`], with all of `F` acting as one coalition.
pub fn collusion_gp_check<S: Share>(g: &OwnershipGraph<S>, sc: &Scenario<S>, t: &Transaction<S>) -> Result<GpVerdict<S>> {
    let after = apply_transaction(&sc.staged_graph(g)?, t)?;
    check_after(after, sc, true)
}

/// Adds `delta` to the `(owner, owned)` holding, capped at 1.
pub fn add_share<S: Share>(g: &OwnershipGraph<S>, owner: usize, owned: usize, delta: S) -> OwnershipGraph<S> {
    let mut edges = g.edges().to_vec();
    match edges.iter_mut().find(|e| e.owner == owner && e.owned == owned) {
        Some(e) => e.share = S::min_of(e.share.clone() + delta, S::one()),
        None => edges.push(Edge {
            owner,
            owned,
            share: S::min_of(delta, S::one()),
        }),
    }
    g.with_edges(edges)
}

/// `g` with `f` holding every unrecorded share of every other company.
pub fn with_residuals<S: Share>(g: &OwnershipGraph<S>, f: usize) -> OwnershipGraph<S> {
    let mut edges = g.edges().to_vec();
    let mut own: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, e) in edges.iter().enumerate() {
        if e.owner == f {
            own.insert(e.owned, i);
        }
    }
    for y in g.companies().filter(|&y| y != f) {
        let residual = S::one() - g.incoming_sum(y);
        if residual <= S::zero() {
            continue;
        }
        match own.get(&y) {
            Some(&i) => edges[i].share = S::min_of(edges[i].share.clone() + residual, S::one()),
            None => edges.push(Edge {
                owner: f,
                owned: y,
                share: residual,
            }),
        }
    }
    g.with_edges(edges)
}

/// As [`gp_check`] for `F = {f}`, assuming `f` holds every share missing
/// from the data.
pub fn cautious_gp_check<S: Share>(
    g: &OwnershipGraph<S>,
    sc: &Scenario<S>,
    t: &Transaction<S>,
    f: &str,
) -> Result<GpVerdict<S>> {
    sc.validate(g)?;
    if !sc.foreign.contains(f) {
        return Err(Error::InvalidScenario(format!("{f} is not foreign")));
    }
    let fi = g.require(f)?;
    let widened = with_residuals(g, fi);
    let after = apply_transaction(&apply_all(&widened, &sc.staged)?, t)?;
    let only_f = Scenario {
        foreign: BTreeSet::from([f.to_string()]),
        ..sc.clone()
    };
    check_after(after, &only_f, false)
}

fn check_quantum(quantum: f64) -> Result<()> {
    if !(quantum > 0.0 && quantum <= 1.0) {
        return Err(Error::InvalidParameter(format!("quantum must be in (0,1], got {quantum}")));
    }
    Ok(())
}

/// `0, q, 2q, ...` up to 1, with 1 appended when the grid falls short of it.
fn grid<S: Share>(quantum: f64) -> Vec<S> {
    let q = S::from_f64_lossy(quantum);
    let steps = (1.0 / quantum + 1e-9).floor() as usize;
    let mut points: Vec<S> = (0..=steps)
        .map(|k| q.clone() * S::from_usize(k).expect("grid index fits"))
        .collect();
    if points.last().is_some_and(|p| *p < S::one()) {
        points.push(S::one());
    }
    points
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct GpLimit<S: Share = f64> {
    #[serde(with = "serde_share")]
    pub max_share: S,
    pub binding_strategic: Option<String>,
}

/// Largest grid share of `target` that `buyer` may hold without any member
/// of `F` controlling a strategic company.
pub fn gp_limit<S: Share>(
    g: &OwnershipGraph<S>,
    sc: &Scenario<S>,
    buyer: &str,
    target: &str,
    quantum: f64,
) -> Result<GpLimit<S>> {
    check_quantum(quantum)?;
    let base = sc.staged_graph(g)?;
    let b = base.require(buyer)?;
    let t = base.require_company(target)?;
    // holding nothing at all is the zero point of the grid
    let without = base.with_edges(
        base.edges()
            .iter()
            .filter(|e| !(e.owner == b && e.owned == t))
            .cloned()
            .collect(),
    );
    let points = grid::<S>(quantum);
    let verdict_at = |k: usize| -> Result<GpVerdict<S>> {
        if k == 0 {
            return check_after(without.clone(), sc, false);
        }
        let tx = Transaction::new(buyer, target, points[k].clone());
        check_after(apply_transaction(&without, &tx)?, sc, false)
    };
    let zero = verdict_at(0)?;
    if zero.takeover {
        let w = &zero.witnesses[0];
        return Err(Error::TakeoverPreexists(format!(
            "{} controls {}",
            w.foreign.ids().join("+"),
            w.strategic
        )));
    }
    let last = points.len() - 1;
    if !verdict_at(last)?.takeover {
        return Ok(GpLimit {
            max_share: points[last].clone(),
            binding_strategic: None,
        });
    }
    // safe at lo, takeover at hi
    let (mut lo, mut hi) = (0, last);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if verdict_at(mid)?.takeover {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let flip = verdict_at(hi)?;
    let binding = flip.witnesses.iter().map(|w| w.strategic.clone()).min();
    Ok(GpLimit {
        max_share: points[lo].clone(),
        binding_strategic: binding,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtectionObjective {
    /// Least total share acquired.
    #[default]
    MinTotal,
    /// Least share acquired directly in the strategic company.
    MinDirectStake,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct Acquisition<S: Share = f64> {
    pub public: String,
    pub target: String,
    #[serde(with = "serde_share")]
    pub delta: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct ProtectionOption<S: Share = f64> {
    pub strategic: String,
    /// Company taken over first, if any.
    pub via: Option<String>,
    pub acquisitions: Vec<Acquisition<S>>,
    #[serde(with = "serde_share")]
    pub total: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct ProtectionPlan<S: Share = f64> {
    pub acquisitions: Vec<Acquisition<S>>,
    pub residual_risk: bool,
    /// Strategic companies no plan could secure.
    pub unprotected: Vec<String>,
    /// Every option considered, per strategic company, chosen one first.
    pub alternatives: Vec<ProtectionOption<S>>,
}

impl<S: Share> ProtectionPlan<S> {
    /// Staged transactions followed by the acquisitions, each added to the
    /// existing holding.
    pub fn apply(&self, g: &OwnershipGraph<S>, sc: &Scenario<S>) -> Result<OwnershipGraph<S>> {
        let mut out = sc.staged_graph(g)?;
        for a in &self.acquisitions {
            let p = out.require(&a.public)?;
            let t = out.require_company(&a.target)?;
            out = add_share(&out, p, t, a.delta.clone());
        }
        Ok(out)
    }
}

struct Protector<'a, S: Share> {
    public: &'a [usize],
    quantum: S,
    quantum_f64: f64,
}

impl<S: Share> Protector<'_, S> {
    /// `(1/2 + q) - cs` rounded up to the grid.
    fn shortfall(&self, cs: &S) -> S {
        let need = S::half() + self.quantum.clone() - cs.clone();
        let steps = (need.to_f64_lossy() / self.quantum_f64 - 1e-9).ceil().max(0.0);
        self.quantum.clone() * S::from_f64_lossy(steps)
    }

    /// Public member with the largest individual control share of `target`,
    /// ties to the smallest id.
    fn holder(&self, g: &OwnershipGraph<S>, target: usize) -> usize {
        let mut best = (self.public[0], S::zero());
        for &p in self.public {
            let share = control_closure(g, &[p]).share(target);
            if share > best.1 {
                best = (p, share);
            }
        }
        best.0
    }

    fn coalition(&self, g: &OwnershipGraph<S>) -> ControlClosure<S> {
        control_closure(g, self.public)
    }

    /// Acquisition securing `target` on `g`, or none when it is out of reach.
    fn secure(&self, g: &OwnershipGraph<S>, closure: &ControlClosure<S>, target: usize) -> Option<(Acquisition<S>, OwnershipGraph<S>)> {
        let cs = closure.share(target);
        let delta = self.shortfall(&cs);
        let holder = self.holder(g, target);
        let held = g.share(holder, target).cloned().unwrap_or_else(S::zero);
        if delta > S::one() - cs || held + delta.clone() > S::one() {
            return None;
        }
        let after = add_share(g, holder, target, delta.clone());
        let acquisition = Acquisition {
            public: g.id(holder).to_string(),
            target: g.id(target).to_string(),
            delta,
        };
        Some((acquisition, after))
    }

    fn options(&self, g: &OwnershipGraph<S>, s: usize, with_intermediaries: bool) -> Vec<(ProtectionOption<S>, OwnershipGraph<S>)> {
        let closure = self.coalition(g);
        let mut out = Vec::new();
        if let Some((a, after)) = self.secure(g, &closure, s) {
            out.push((
                ProtectionOption {
                    strategic: g.id(s).to_string(),
                    via: None,
                    total: a.delta.clone(),
                    acquisitions: vec![a],
                },
                after,
            ));
        }
        if !with_intermediaries {
            return out;
        }
        let inside: BTreeSet<usize> = closure.seeds.iter().chain(&closure.controlled).copied().collect();
        for e in g.in_edges(s) {
            let via = e.owner;
            if via == s || inside.contains(&via) || !g.is_company(via) {
                continue;
            }
            let Some((first, step)) = self.secure(g, &closure, via) else {
                continue;
            };
            let step_closure = self.coalition(&step);
            let mut acquisitions = vec![first];
            let mut after = step;
            if !step_closure.controlled.contains(&s) {
                let Some((second, done)) = self.secure(&after, &step_closure, s) else {
                    continue;
                };
                acquisitions.push(second);
                after = done;
            }
            let total = acquisitions.iter().fold(S::zero(), |acc, a| acc + a.delta.clone());
            out.push((
                ProtectionOption {
                    strategic: g.id(s).to_string(),
                    via: Some(g.id(via).to_string()),
                    acquisitions,
                    total,
                },
                after,
            ));
        }
        out
    }
}

fn direct_stake<S: Share>(o: &ProtectionOption<S>) -> S {
    o.acquisitions
        .iter()
        .filter(|a| a.target == o.strategic)
        .fold(S::zero(), |acc, a| acc + a.delta.clone())
}

/// Share acquisitions by `P` that leave every strategic company under
/// public control, so that `F` cannot gain control whatever it buys.
pub fn gp_protection<S: Share>(
    g: &OwnershipGraph<S>,
    sc: &Scenario<S>,
    with_intermediaries: bool,
    quantum: f64,
    objective: ProtectionObjective,
) -> Result<ProtectionPlan<S>> {
    check_quantum(quantum)?;
    let mut work = sc.staged_graph(g)?;
    if sc.public.is_empty() {
        return Err(Error::InvalidScenario("protection needs at least one public entity".into()));
    }
    let public = sc.indices(&work, &sc.public)?;
    let strategic = sc.indices(&work, &sc.strategic)?;
    let protector = Protector {
        public: &public,
        quantum: S::from_f64_lossy(quantum),
        quantum_f64: quantum,
    };
    let mut plan = ProtectionPlan {
        acquisitions: Vec::new(),
        residual_risk: false,
        unprotected: Vec::new(),
        alternatives: Vec::new(),
    };
    for s in strategic {
        if protector.coalition(&work).controlled.contains(&s) {
            continue;
        }
        let mut options = protector.options(&work, s, with_intermediaries);
        if options.is_empty() {
            plan.residual_risk = true;
            plan.unprotected.push(work.id(s).to_string());
            continue;
        }
        // stable sort keeps the direct option ahead on ties
        options.sort_by(|(a, _), (b, _)| {
            let key = |o: &ProtectionOption<S>| match objective {
                ProtectionObjective::MinTotal => (o.total.clone(), direct_stake(o)),
                ProtectionObjective::MinDirectStake => (direct_stake(o), o.total.clone()),
            };
            key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut options = options.into_iter();
        let (chosen, after) = options.next().expect("non-empty options");
        plan.acquisitions.extend(chosen.acquisitions.iter().cloned());
        plan.alternatives.push(chosen);
        plan.alternatives.extend(options.map(|(o, _)| o));
        work = after;
    }
    Ok(plan)
}
