use super::{is_attack, AdmissibilityParams, AttackError, NOMINAL, TOL_ADMISSIBLE};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEvent {
    pub time: f64,
    pub mode: String,
}

/// Piecewise-constant mode signal on `[0, horizon]`. The first event sits at
/// `t = 0` and fixes the initial mode; every later event is a switch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSchedule {
    pub events: Vec<ScheduleEvent>,
    pub horizon: f64,
}

impl AttackSchedule {
    pub fn new(events: Vec<ScheduleEvent>, horizon: f64) -> Result<Self, AttackError> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(AttackError::BadSchedule(format!("horizon {horizon} must be finite and >= 0")));
        }
        if let Some(first) = events.first() {
            if first.time != 0.0 {
                return Err(AttackError::BadSchedule("first event must be at t = 0".into()));
            }
        }
        for pair in events.windows(2) {
            if !(pair[1].time > pair[0].time) {
                return Err(AttackError::BadSchedule(format!(
                    "event times must strictly increase ({} then {})",
                    pair[0].time, pair[1].time
                )));
            }
            if pair[1].mode == pair[0].mode {
                return Err(AttackError::BadSchedule(format!("switch at {} keeps mode {}", pair[1].time, pair[1].mode)));
            }
        }
        if events.last().is_some_and(|e| e.time > horizon) {
            return Err(AttackError::BadSchedule("event beyond horizon".into()));
        }
        Ok(Self { events, horizon })
    }

    /// Single mode over the whole horizon.
    pub fn constant(mode: &str, horizon: f64) -> Self {
        Self {
            events: vec![ScheduleEvent { time: 0.0, mode: mode.to_string() }],
            horizon,
        }
    }

    pub fn nominal(horizon: f64) -> Self {
        Self::constant(NOMINAL, horizon)
    }

    pub fn mode_at(&self, t: f64) -> &str {
        let idx = self.events.partition_point(|e| e.time <= t);
        if idx == 0 {
            NOMINAL
        } else {
            &self.events[idx - 1].mode
        }
    }

    pub fn switch_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().skip(1).map(|e| e.time)
    }

    /// Same signal on a rescaled clock: every time is multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            events: self
                .events
                .iter()
                .map(|e| ScheduleEvent { time: e.time * factor, mode: e.mode.clone() })
                .collect(),
            horizon: self.horizon * factor,
        }
    }

    fn check_interval(&self, s: f64, t: f64) -> Result<(), AttackError> {
        if 0.0 <= s && s < t && t <= self.horizon {
            Ok(())
        } else {
            Err(AttackError::BadInterval { s, t, horizon: self.horizon })
        }
    }

    /// `N(s,t)`: switches in `(s, t]`.
    pub fn count_switches(&self, s: f64, t: f64) -> Result<usize, AttackError> {
        self.check_interval(s, t)?;
        Ok(self.switch_times().filter(|&e| e > s && e <= t).count())
    }

    /// Maximal attack intervals, merged across attack-to-attack switches and
    /// clipped to the horizon.
    pub fn attack_segments(&self, attack_ids: &[String]) -> Vec<(f64, f64)> {
        let mut segs: Vec<(f64, f64)> = Vec::new();
        for (k, ev) in self.events.iter().enumerate() {
            if !is_attack(attack_ids, &ev.mode) {
                continue;
            }
            let end = self.events.get(k + 1).map_or(self.horizon, |n| n.time).min(self.horizon);
            if end <= ev.time {
                continue;
            }
            match segs.last_mut() {
                Some(last) if last.1 == ev.time => last.1 = end,
                _ => segs.push((ev.time, end)),
            }
        }
        segs
    }

    /// `T(s,t)`: time spent in attack modes within `[s, t]`.
    pub fn attack_time(&self, attack_ids: &[String], s: f64, t: f64) -> Result<f64, AttackError> {
        self.check_interval(s, t)?;
        Ok(self
            .attack_segments(attack_ids)
            .iter()
            .map(|&(a, b)| (b.min(t) - a.max(s)).max(0.0))
            .sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    SwitchCount,
    AttackTime,
}

/// Interval attaining the worst slack. For switch counts `s` is a left limit:
/// the bound is evaluated on `(s⁻, t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: WitnessKind,
    pub s: f64,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityVerdict {
    pub admissible: bool,
    /// `min (κ₁(t−s) + N₀ − N(s,t))`; `+∞` without switches.
    pub switch_slack: f64,
    /// `min (κ₂(t−s) + T₀ − T(s,t))`; `+∞` without attacks.
    pub time_slack: f64,
    pub switch_witness: Option<Witness>,
    pub time_witness: Option<Witness>,
}

impl AdmissibilityVerdict {
    /// Witness of the violated bound, if any.
    pub fn violation(&self) -> Option<Witness> {
        if self.switch_slack < -TOL_ADMISSIBLE {
            self.switch_witness
        } else if self.time_slack < -TOL_ADMISSIBLE {
            self.time_witness
        } else {
            None
        }
    }
}

/// Evaluates both budget inequalities over all sub-intervals of the horizon.
///
/// The switch-count slack is minimized with `t` on a switch and `s` just left
/// of a switch; the attack-time slack with `s` at an attack-segment start and
/// `t` at an attack-segment end. Running extrema make both passes linear.
pub fn check_admissible(schedule: &AttackSchedule, params: &AdmissibilityParams, attack_ids: &[String]) -> AdmissibilityVerdict {
    let n0 = params.n0f();

    let mut switch_slack = f64::INFINITY;
    let mut switch_witness = None;
    // slack(i, j) = κ₁e_j + N₀ − j − 1 + (i − κ₁e_i), 0-based indices over switches
    let mut best_i: Option<(f64, f64, usize)> = None;
    for (j, ej) in schedule.switch_times().enumerate() {
        let cand = j as f64 - params.kappa1 * ej;
        if best_i.is_none_or(|(v, _, _)| cand < v) {
            best_i = Some((cand, ej, j));
        }
        let (v, ei, i) = best_i.expect("set above");
        let slack = params.kappa1 * ej + n0 - j as f64 - 1.0 + v;
        if slack < switch_slack {
            switch_slack = slack;
            let rhs = params.kappa1 * (ej - ei) + n0;
            switch_witness = Some(Witness {
                kind: WitnessKind::SwitchCount,
                s: ei,
                t: ej,
                lhs: (j - i + 1) as f64,
                rhs,
            });
        }
    }

    let mut time_slack = f64::INFINITY;
    let mut time_witness = None;
    let segs = schedule.attack_segments(attack_ids);
    let mut prefix_before = 0.0;
    let mut best_start: Option<(f64, f64, f64)> = None; // (κ₂a_i − S_{i−1}, a_i, S_{i−1})
    for &(a, b) in &segs {
        let cand = params.kappa2 * a - prefix_before;
        if best_start.is_none_or(|(v, _, _)| cand > v) {
            best_start = Some((cand, a, prefix_before));
        }
        let prefix = prefix_before + (b - a);
        let (v, ai, sprev) = best_start.expect("set above");
        let excess = prefix - params.kappa2 * b + v;
        let slack = params.t0 - excess;
        if slack < time_slack {
            time_slack = slack;
            time_witness = Some(Witness {
                kind: WitnessKind::AttackTime,
                s: ai,
                t: b,
                lhs: prefix - sprev,
                rhs: params.kappa2 * (b - ai) + params.t0,
            });
        }
        prefix_before = prefix;
    }

    AdmissibilityVerdict {
        admissible: switch_slack >= -TOL_ADMISSIBLE && time_slack >= -TOL_ADMISSIBLE,
        switch_slack,
        time_slack,
        switch_witness,
        time_witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(ev: &[(f64, &str)], horizon: f64) -> AttackSchedule {
        AttackSchedule::new(
            ev.iter().map(|&(time, m)| ScheduleEvent { time, mode: m.to_string() }).collect(),
            horizon,
        )
        .unwrap()
    }

    fn ids() -> Vec<String> {
        vec!["a1".into(), "a2".into()]
    }

    #[test]
    fn counts() {
        let s = AttackSchedule::nominal(10.0);
        assert_eq!(s.count_switches(0.0, 10.0).unwrap(), 0);
        let s = sched(&[(0.0, "s"), (1.0, "a1"), (2.0, "s"), (3.0, "a2")], 10.0);
        assert_eq!(s.count_switches(0.5, 2.5).unwrap(), 2);
        assert!(s.count_switches(3.0, 1.0).is_err());
    }

    #[test]
    fn attack_time_examples() {
        let s = AttackSchedule::nominal(10.0);
        assert_eq!(s.attack_time(&ids(), 0.0, 10.0).unwrap(), 0.0);
        let s = sched(&[(0.0, "s"), (1.0, "a1"), (3.0, "s")], 10.0);
        assert_eq!(s.attack_time(&ids(), 0.0, 10.0).unwrap(), 2.0);
        assert_eq!(s.attack_time(&ids(), 2.0, 10.0).unwrap(), 1.0);
    }

    #[test]
    fn merges_attack_to_attack() {
        let s = sched(&[(0.0, "a1"), (1.0, "a2"), (2.5, "s"), (4.0, "a1")], 5.0);
        assert_eq!(s.attack_segments(&ids()), vec![(0.0, 2.5), (4.0, 5.0)]);
    }

    #[test]
    fn rejects_malformed() {
        let bad = vec![ScheduleEvent { time: 1.0, mode: "s".into() }];
        assert!(AttackSchedule::new(bad, 5.0).is_err());
        let dup = vec![
            ScheduleEvent { time: 0.0, mode: "s".into() },
            ScheduleEvent { time: 1.0, mode: "s".into() },
        ];
        assert!(AttackSchedule::new(dup, 5.0).is_err());
    }

    #[test]
    fn nominal_only_admissible() {
        let p = AdmissibilityParams { kappa1: 0.1, kappa2: 0.3, n0: 1, t0: 0.0 };
        assert!(check_admissible(&AttackSchedule::nominal(100.0), &p, &ids()).admissible);
    }

    #[test]
    fn long_attack_segment_violates_time_budget() {
        let p = AdmissibilityParams { kappa1: 1.0, kappa2: 0.2, n0: 5, t0: 1.0 };
        // T = L exceeds κ₂L + T₀ by more than 0.1 once L(1−κ₂) > T₀ + 0.1
        let len = (p.t0 + 0.1) / (1.0 - p.kappa2) + 0.5;
        let s = sched(&[(0.0, "s"), (2.0, "a1"), (2.0 + len, "s")], 20.0);
        let v = check_admissible(&s, &p, &ids());
        assert!(!v.admissible);
        let w = v.violation().unwrap();
        assert_eq!(w.kind, WitnessKind::AttackTime);
        assert_eq!((w.s, w.t), (2.0, 2.0 + len));
        assert!((w.lhs - len).abs() < 1e-12);
        assert!((v.time_slack - (p.t0 + p.kappa2 * len - len)).abs() < 1e-12);
    }

    #[test]
    fn packed_switches_violate_count_budget() {
        let p = AdmissibilityParams { kappa1: 0.5, kappa2: 0.5, n0: 2, t0: 100.0 };
        let k = 2 + 1 + 5;
        let mut ev = vec![(0.0, "s")];
        for i in 0..k {
            ev.push((1.0 + i as f64 / k as f64, if i % 2 == 0 { "a1" } else { "s" }));
        }
        let v = check_admissible(&sched(&ev, 10.0), &p, &ids());
        assert!(!v.admissible);
        let w = v.violation().unwrap();
        assert_eq!(w.kind, WitnessKind::SwitchCount);
        assert_eq!(w.lhs, k as f64);
    }
}
