use std::collections::HashMap;
use std::sync::Arc;

use crate::bn::{Distribution, Network, VarId};
use crate::geometry::Situation;

use super::model::truth;
use super::states::{self, BINARY, COURSE, PRIORITY, ROLE, SIDE, SITUATION, SPEED, TREND};
use super::{
    discretize_truncnorm, Discretization, IntentionError, IntentionPriors, MeasurementVector,
    ModelNodeKind, ModelNodeSpec, Quantity, TruncNorm,
};

/// The time-independent intention nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct IntentionIds {
    pub ample_time: VarId,
    pub colregs_compliant: VarId,
    pub good_seamanship: VarId,
    pub priority: Vec<VarId>,
    pub situation: Vec<VarId>,
    pub towards_ground: VarId,
    pub safe_distance_ground_side: VarId,
    pub safe_distance_ground_front: VarId,
    pub safe_distance: VarId,
    pub safe_distance_front: VarId,
    pub safe_distance_midpoint: VarId,
    pub unmodeled: VarId,
}

impl IntentionIds {
    /// All intention nodes in a fixed order.
    pub fn all(&self) -> Vec<VarId> {
        let mut v = vec![self.ample_time, self.colregs_compliant, self.good_seamanship];
        v.extend(&self.priority);
        v.extend(&self.situation);
        v.extend([
            self.towards_ground,
            self.safe_distance_ground_side,
            self.safe_distance_ground_front,
            self.safe_distance,
            self.safe_distance_front,
            self.safe_distance_midpoint,
            self.unmodeled,
        ]);
        v
    }
}

/// Per-ship nodes of one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ShipSliceIds {
    pub dcpa: VarId,
    pub df: VarId,
    pub dm: VarId,
    pub passed_measured: VarId,
    pub ps: VarId,
    pub mps: VarId,
    pub tcpa: VarId,
    pub cs: VarId,
    pub sd: VarId,
    pub passed: VarId,
    pub c_oten: VarId,
    pub c_oting: VarId,
    pub c_ho: VarId,
    pub c_cr_ss: VarId,
    pub c_cr_ps: VarId,
    pub c_nav_m: VarId,
    pub role: VarId,
    pub gs: VarId,
    pub cem: VarId,
    pub soc: VarId,
    pub gwc: VarId,
    pub c_colav_m: VarId,
    pub compatible: VarId,
}

/// Nodes of one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceIds {
    pub ships: Vec<ShipSliceIds>,
    pub cic: VarId,
    pub cis: VarId,
    pub ccc: VarId,
    pub dgsb: VarId,
    pub dgps: VarId,
    pub dgf: VarId,
    pub wprb: VarId,
    pub wprd: VarId,
    pub wpah: VarId,
    pub nav_m: VarId,
    pub sa: VarId,
    pub pa: VarId,
    pub sdg_s: VarId,
    pub sdg_f: VarId,
    pub sdg: VarId,
    pub compatible: VarId,
}

/// Multi-slice intention network with handles to every node.
#[derive(Clone)]
pub struct IntentionDbn {
    net: Network,
    n_ships: usize,
    bins: usize,
    intentions: IntentionIds,
    sa_init: VarId,
    pa_init: VarId,
    slices: Vec<SliceIds>,
    /// Network length and spec count before each slice was added.
    marks: Vec<(usize, usize)>,
    specs: Vec<ModelNodeSpec>,
    disc_labels: HashMap<Quantity, Vec<String>>,
}

/// Situation prior peaked on the measured situation.
pub fn intention_cs_prior(measured: Situation, concentration: f64) -> Vec<f64> {
    let rest = (1.0 - concentration) / (Situation::ALL.len() - 1) as f64;
    Situation::ALL.iter().map(|&s| if s == measured { concentration } else { rest }).collect()
}

fn bernoulli(p_true: f64) -> Vec<f64> {
    vec![1.0 - p_true, p_true]
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn bin_labels(disc: &Discretization, q: Quantity) -> Vec<String> {
    let e = disc.edges(q);
    (0..disc.bins)
        .map(|k| if k + 1 == disc.bins { format!("{}+", e[k]) } else { format!("{}-{}", e[k], e[k + 1]) })
        .collect()
}

fn threshold_prior(
    node: &'static str,
    spec: &TruncNorm,
    disc: &Discretization,
    q: Quantity,
) -> Result<Vec<f64>, IntentionError> {
    let upper = disc.upper(q);
    if spec.lo != 0.0 || spec.hi != upper {
        return Err(IntentionError::InvalidPrior {
            node,
            reason: format!("window [{}, {}] must equal the node range [0, {upper}]", spec.lo, spec.hi),
        });
    }
    discretize_truncnorm(spec.mean, spec.sd, spec.lo, spec.hi, disc.bins)
}

/// Builds the network with `slices` slices for `n_ships` obstacles.
/// Situation priors start uniform; see [`IntentionDbn::anchor_situations`].
pub fn build_intention_dbn(
    n_ships: usize,
    priors: &IntentionPriors,
    disc: &Discretization,
    slices: usize,
) -> Result<IntentionDbn, IntentionError> {
    if n_ships == 0 || slices == 0 {
        return Err(IntentionError::InvalidDiscretization(format!(
            "need at least one ship and one slice, got {n_ships} and {slices}"
        )));
    }
    priors.validate()?;
    disc.validate()?;
    let mut net = Network::new();
    let labels = |q| bin_labels(disc, q);
    let real = |net: &mut Network, name: &str, q: Quantity, prior: Vec<f64>| {
        let l = labels(q);
        let l: Vec<&str> = l.iter().map(String::as_str).collect();
        net.add_table(name, &l, &[], prior)
    };
    let ample_time = real(
        &mut net,
        "I_AT",
        Quantity::Tcpa,
        threshold_prior("I_AT", &priors.ample_time, disc, Quantity::Tcpa)?,
    )?;
    let colregs_compliant = net.add_table("I_CC", BINARY, &[], bernoulli(priors.colregs_compliant))?;
    let good_seamanship = net.add_table("I_GS", BINARY, &[], bernoulli(priors.good_seamanship))?;
    let mut priority = Vec::new();
    for i in 1..=n_ships {
        priority.push(net.add_table(&format!("I_P_{i}"), PRIORITY, &[], priors.priority.to_vec())?);
    }
    let mut situation = Vec::new();
    for i in 1..=n_ships {
        situation.push(net.add_table(&format!("I_CS_{i}"), SITUATION, &[], uniform(SITUATION.len()))?);
    }
    let towards_ground = net.add_table("I_G", BINARY, &[], bernoulli(priors.towards_ground))?;
    let safe_distance_ground_side = real(
        &mut net,
        "I_SDGS",
        Quantity::GroundSide,
        threshold_prior("I_SDGS", &priors.safe_distance_ground_side, disc, Quantity::GroundSide)?,
    )?;
    let safe_distance_ground_front = real(
        &mut net,
        "I_SDGF",
        Quantity::GroundFront,
        threshold_prior("I_SDGF", &priors.safe_distance_ground_front, disc, Quantity::GroundFront)?,
    )?;
    let safe_distance = real(
        &mut net,
        "I_SD",
        Quantity::Dcpa,
        threshold_prior("I_SD", &priors.safe_distance, disc, Quantity::Dcpa)?,
    )?;
    let safe_distance_front = real(
        &mut net,
        "I_SDF",
        Quantity::FrontCrossing,
        threshold_prior("I_SDF", &priors.safe_distance_front, disc, Quantity::FrontCrossing)?,
    )?;
    let safe_distance_midpoint = real(
        &mut net,
        "I_SDM",
        Quantity::Midpoint,
        threshold_prior("I_SDM", &priors.safe_distance_midpoint, disc, Quantity::Midpoint)?,
    )?;
    let unmodeled = net.add_table("I_U", BINARY, &[], bernoulli(priors.unmodeled))?;
    let sa_init = net.add_table("SA_init", BINARY, &[], uniform(2))?;
    let pa_init = net.add_table("PA_init", BINARY, &[], uniform(2))?;
    let intentions = IntentionIds {
        ample_time,
        colregs_compliant,
        good_seamanship,
        priority,
        situation,
        towards_ground,
        safe_distance_ground_side,
        safe_distance_ground_front,
        safe_distance,
        safe_distance_front,
        safe_distance_midpoint,
        unmodeled,
    };
    let disc_labels: HashMap<Quantity, Vec<String>> = [
        Quantity::Dcpa,
        Quantity::FrontCrossing,
        Quantity::Midpoint,
        Quantity::Tcpa,
        Quantity::GroundSide,
        Quantity::GroundFront,
    ]
    .into_iter()
    .map(|q| (q, labels(q)))
    .collect();
    let mut dbn = IntentionDbn {
        net,
        n_ships,
        bins: disc.bins,
        intentions,
        sa_init,
        pa_init,
        slices: Vec::new(),
        marks: Vec::new(),
        specs: Vec::new(),
        disc_labels,
    };
    for _ in 0..slices {
        dbn.append_slice()?;
    }
    Ok(dbn)
}

impl IntentionDbn {
    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn n_ships(&self) -> usize {
        self.n_ships
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn intentions(&self) -> &IntentionIds {
        &self.intentions
    }

    pub fn slice_count(&self) -> usize {
        self.slices.len()
    }

    pub fn slice(&self, t: usize) -> Result<&SliceIds, IntentionError> {
        self.slices.get(t).ok_or(IntentionError::NoSuchSlice(t))
    }

    pub fn latch_roots(&self) -> (VarId, VarId) {
        (self.sa_init, self.pa_init)
    }

    /// Every model node with its kind and wiring.
    pub fn model_specs(&self) -> &[ModelNodeSpec] {
        &self.specs
    }

    fn real(&mut self, name: String, q: Quantity) -> Result<VarId, IntentionError> {
        let labels: Vec<&str> = self.disc_labels[&q].iter().map(String::as_str).collect();
        Ok(self.net.add_table(&name, &labels, &[], uniform(self.bins))?)
    }

    fn categorical(&mut self, name: String, labels: &[&str]) -> Result<VarId, IntentionError> {
        Ok(self.net.add_table(&name, labels, &[], uniform(labels.len()))?)
    }

    fn model(&mut self, name: String, kind: ModelNodeKind, parents: Vec<VarId>) -> Result<VarId, IntentionError> {
        debug_assert_eq!(parents.len(), kind.arity());
        let labels = if kind == ModelNodeKind::Role { ROLE } else { BINARY };
        let rule = Arc::new(move |s: &[usize]| truth(kind, s) as usize);
        let var = self.net.add_deterministic(&name, labels, &parents, rule)?;
        self.specs.push(ModelNodeSpec { var, name, kind, parents });
        Ok(var)
    }

    /// Appends a slice wired to the shared intention nodes and to the
    /// previous slice's action latches; returns its index.
    pub fn append_slice(&mut self) -> Result<usize, IntentionError> {
        use ModelNodeKind::*;
        let t = self.slices.len();
        self.marks.push((self.net.len(), self.specs.len()));
        let n = self.n_ships;
        let cic = self.categorical(format!("CIC[{t}]"), COURSE)?;
        let cis = self.categorical(format!("CIS[{t}]"), SPEED)?;
        let ccc = self.categorical(format!("CCC[{t}]"), BINARY)?;
        let dgsb = self.real(format!("DGSB[{t}]"), Quantity::GroundSide)?;
        let dgps = self.real(format!("DGPS[{t}]"), Quantity::GroundSide)?;
        let dgf = self.real(format!("DGF[{t}]"), Quantity::GroundFront)?;
        let wprb = self.categorical(format!("WPRB[{t}]"), TREND)?;
        let wprd = self.categorical(format!("WPRD[{t}]"), TREND)?;
        let wpah = self.categorical(format!("WPAH[{t}]"), BINARY)?;
        let (sa_prev, pa_prev) = match self.slices.last() {
            Some(prev) => (prev.sa, prev.pa),
            None => (self.sa_init, self.pa_init),
        };
        let sa = self.model(format!("SA[{t}]"), StarboardAction, vec![sa_prev, cic])?;
        let pa = self.model(format!("PA[{t}]"), PortAction, vec![pa_prev, cic])?;
        let nav_m = self.model(format!("NAV_M[{t}]"), NavigationalManeuver, vec![wprd, wprb, wpah])?;
        let ii = self.intentions.clone();
        let sdg_s = self.model(format!("SDG_S[{t}]"), SafeGroundSide, vec![dgsb, dgps, ii.safe_distance_ground_side, cic])?;
        let sdg_f = self.model(format!("SDG_F[{t}]"), SafeGroundFront, vec![dgf, ii.safe_distance_ground_front, cic])?;
        let sdg = self.model(format!("SDG[{t}]"), SafeGround, vec![sdg_s, sdg_f])?;

        struct Partial {
            m: [VarId; 8],
            sd: VarId,
            passed: VarId,
            c_oten: VarId,
            c_oting: VarId,
            c_ho: VarId,
            c_cr_ss: VarId,
            c_cr_ps: VarId,
            c_nav_m: VarId,
            role: VarId,
            gs: VarId,
            cem: VarId,
        }
        let mut partial = Vec::with_capacity(n);
        for i in 0..n {
            let k = i + 1;
            let dcpa = self.real(format!("DCPA_{k}[{t}]"), Quantity::Dcpa)?;
            let df = self.real(format!("DF_{k}[{t}]"), Quantity::FrontCrossing)?;
            let dm = self.real(format!("DM_{k}[{t}]"), Quantity::Midpoint)?;
            let m_p = self.categorical(format!("M_P_{k}[{t}]"), BINARY)?;
            let ps = self.categorical(format!("PS_{k}[{t}]"), SIDE)?;
            let mps = self.categorical(format!("MPS_{k}[{t}]"), SIDE)?;
            let tcpa = self.real(format!("TCPA_{k}[{t}]"), Quantity::Tcpa)?;
            let cs = self.categorical(format!("CS_{k}[{t}]"), SITUATION)?;
            let i_cs = ii.situation[i];
            let sd = self.model(format!("SD_{k}[{t}]"), SafeDistance, vec![dcpa, ii.safe_distance, df, ii.safe_distance_front])?;
            let passed = self.model(format!("P_{k}[{t}]"), SafelyPassed, vec![m_p, sd])?;
            let c_oten = self.model(format!("C_OTen_{k}[{t}]"), CorrectBeingOvertaken, vec![sd])?;
            let c_oting = self.model(format!("C_OTing_{k}[{t}]"), CorrectOvertaking, vec![sd])?;
            let c_ho = self.model(format!("C_HO_{k}[{t}]"), CorrectHeadOn, vec![dm, ii.safe_distance_midpoint, mps])?;
            let c_cr_ss = self.model(format!("C_CR_SS_{k}[{t}]"), CorrectCrossingStarboard, vec![sd, ps])?;
            let c_cr_ps = self.model(format!("C_CR_PS_{k}[{t}]"), CorrectCrossingPort, vec![sd, cic])?;
            let c_nav_m = self.model(
                format!("C_NAV_M_{k}[{t}]"),
                CorrectNavigationalManeuver,
                vec![nav_m, sd, i_cs, m_p, dm, ii.safe_distance_midpoint],
            )?;
            let role = self.model(format!("R_{k}[{t}]"), Role, vec![ii.priority[i], i_cs])?;
            let gs = self.model(format!("GS_{k}[{t}]"), GoodSeamanship, vec![sa, pa, cic, ps])?;
            let cem = self.model(
                format!("CEM_{k}[{t}]"),
                CorrectEvasiveManeuver,
                vec![ii.good_seamanship, gs, ii.colregs_compliant, i_cs, c_oting, c_oten, c_ho, c_cr_ss, c_cr_ps],
            )?;
            partial.push(Partial {
                m: [dcpa, df, dm, m_p, ps, mps, tcpa, cs],
                sd,
                passed,
                c_oten,
                c_oting,
                c_ho,
                c_cr_ss,
                c_cr_ps,
                c_nav_m,
                role,
                gs,
                cem,
            });
        }
        let mut ships = Vec::with_capacity(n);
        for i in 0..n {
            let k = i + 1;
            let mut soc_parents = vec![cic, cis];
            for (j, other) in partial.iter().enumerate() {
                if j != i {
                    soc_parents.extend([other.role, other.cem, other.passed]);
                }
            }
            let p = &partial[i];
            let soc = self.model(format!("SOC_{k}[{t}]"), StandsOnCorrectly { others: n - 1 }, soc_parents)?;
            let gwc = self.model(
                format!("GWC_{k}[{t}]"),
                GivesWayCorrectly,
                vec![p.cem, ccc, p.m[6], ii.ample_time, soc],
            )?;
            let c_colav_m =
                self.model(format!("C_COLAV_M_{k}[{t}]"), CorrectCollisionAvoidance, vec![p.passed, p.role, soc, gwc])?;
            let compatible = self.model(
                format!("C_{k}[{t}]"),
                CompatibleShip,
                vec![c_colav_m, p.c_nav_m, sdg, ii.towards_ground],
            )?;
            ships.push(ShipSliceIds {
                dcpa: p.m[0],
                df: p.m[1],
                dm: p.m[2],
                passed_measured: p.m[3],
                ps: p.m[4],
                mps: p.m[5],
                tcpa: p.m[6],
                cs: p.m[7],
                sd: p.sd,
                passed: p.passed,
                c_oten: p.c_oten,
                c_oting: p.c_oting,
                c_ho: p.c_ho,
                c_cr_ss: p.c_cr_ss,
                c_cr_ps: p.c_cr_ps,
                c_nav_m: p.c_nav_m,
                role: p.role,
                gs: p.gs,
                cem: p.cem,
                soc,
                gwc,
                c_colav_m,
                compatible,
            });
        }
        let mut c_parents: Vec<VarId> = ships.iter().map(|s| s.compatible).collect();
        c_parents.push(ii.unmodeled);
        let compatible = self.model(format!("C[{t}]"), CompatibleAll { ships: n }, c_parents)?;
        self.slices.push(SliceIds {
            ships,
            cic,
            cis,
            ccc,
            dgsb,
            dgps,
            dgf,
            wprb,
            wprd,
            wpah,
            nav_m,
            sa,
            pa,
            sdg_s,
            sdg_f,
            sdg,
            compatible,
        });
        Ok(t)
    }

    /// Drops every slice from index `keep` on, with its evidence.
    pub fn truncate_slices(&mut self, keep: usize) {
        if keep >= self.slices.len() {
            return;
        }
        let (len, specs) = self.marks[keep];
        self.net.truncate(len);
        self.specs.truncate(specs);
        self.slices.truncate(keep);
        self.marks.truncate(keep);
    }

    /// Hard evidence on every measurement node of slice `t`.
    pub fn set_measurements(&mut self, t: usize, m: &MeasurementVector) -> Result<(), IntentionError> {
        let ids = self.slice(t)?.clone();
        if m.ships.len() != self.n_ships {
            return Err(IntentionError::ShipCount { expected: self.n_ships, got: m.ships.len() });
        }
        let b = |v: bool| v as usize;
        let net = &mut self.net;
        net.set_evidence(ids.cic, states::course(m.cic))?;
        net.set_evidence(ids.cis, states::speed(m.cis))?;
        net.set_evidence(ids.ccc, b(m.ccc))?;
        net.set_evidence(ids.dgsb, m.dgsb_bin)?;
        net.set_evidence(ids.dgps, m.dgps_bin)?;
        net.set_evidence(ids.dgf, m.dgf_bin)?;
        net.set_evidence(ids.wprb, states::trend(m.wprb))?;
        net.set_evidence(ids.wprd, states::trend(m.wprd))?;
        net.set_evidence(ids.wpah, b(m.wpah))?;
        for (s, sm) in ids.ships.iter().zip(&m.ships) {
            net.set_evidence(s.dcpa, sm.dcpa_bin)?;
            net.set_evidence(s.df, sm.df_bin)?;
            net.set_evidence(s.dm, sm.dm_bin)?;
            net.set_evidence(s.tcpa, sm.tcpa_bin)?;
            net.set_evidence(s.passed_measured, b(sm.passed))?;
            net.set_evidence(s.ps, states::side(sm.passing_side))?;
            net.set_evidence(s.mps, states::side(sm.midpoint_side))?;
            net.set_evidence(s.cs, sm.situation.index())?;
        }
        Ok(())
    }

    /// Observes `C[t] = true`.
    pub fn set_compatible(&mut self, t: usize) -> Result<(), IntentionError> {
        let c = self.slice(t)?.compatible;
        Ok(self.net.set_evidence(c, states::TRUE)?)
    }

    /// Observes the action latches carried into the first slice.
    pub fn set_latches(&mut self, starboard: bool, port: bool) -> Result<(), IntentionError> {
        self.net.set_evidence(self.sa_init, starboard as usize)?;
        self.net.set_evidence(self.pa_init, port as usize)?;
        Ok(())
    }

    /// Sets each ship's situation prior from the situation measured at the
    /// start of the encounter.
    pub fn anchor_situations(&mut self, measured: &[Situation], concentration: f64) -> Result<(), IntentionError> {
        if measured.len() != self.n_ships {
            return Err(IntentionError::ShipCount { expected: self.n_ships, got: measured.len() });
        }
        for (&var, &s) in self.intentions.situation.iter().zip(measured) {
            self.net.set_prior(var, intention_cs_prior(s, concentration))?;
        }
        Ok(())
    }

    /// Replaces the prior of every intention node with a flat one.
    pub fn flatten_intention_priors(&mut self) -> Result<(), IntentionError> {
        for var in self.intentions.all() {
            let k = self.net.cardinality(var);
            self.net.set_prior(var, uniform(k))?;
        }
        Ok(())
    }

    /// Virtual evidence on intention nodes, one likelihood per distribution.
    pub fn set_intention_likelihoods(&mut self, dists: &[Distribution]) -> Result<(), IntentionError> {
        for d in dists {
            self.net.set_virtual_evidence(d.var, d.probabilities.clone())?;
        }
        Ok(())
    }

    pub fn clear_all_evidence(&mut self) {
        self.net.clear_all_evidence();
    }

    /// Variables worth conditioning on: the two intention nodes shared by
    /// every compatibility node.
    pub fn cutset(&self) -> Vec<VarId> {
        vec![self.intentions.unmodeled, self.intentions.towards_ground]
    }
}
