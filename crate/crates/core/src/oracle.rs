//! Brute-force enumeration of every joint power assignment. Only usable for
//! a handful of femtocells, which is exactly what it is for: ground truth on
//! small instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::LinkCapacities;
use crate::coordinator::Environment;
use crate::error::{Error, Result};
use crate::learning::ActionSet;

/// One power-level index per femtocell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JointAction(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_action: JointAction,
    /// Sum FUE capacity of `best_action`, b/s/Hz.
    pub best_objective: f64,
    /// Whether any joint action meets every QoS constraint. When false,
    /// `best_action` is the unconstrained maximizer.
    pub feasible: bool,
    pub c_mue: f64,
    pub c_fue: Vec<f64>,
    pub evaluated: u64,
}

/// Number of joint actions, as a float so huge instances do not overflow.
pub fn joint_action_count(n_power: usize, agents: usize) -> f64 {
    (n_power as f64).powi(agents as i32)
}

pub fn satisfies_qos(caps: &LinkCapacities, env: &Environment) -> bool {
    caps.c_mue >= env.q_mue && caps.c_fue.iter().zip(&env.q_fue).all(|(c, q)| c >= q)
}

#[derive(Debug, Clone)]
struct Best {
    action: Vec<usize>,
    objective: f64,
}

impl Best {
    // Strict improvement only: enumeration is lexicographic, so the first
    // maximizer seen is the lexicographically smallest.
    fn offer(slot: &mut Option<Best>, action: &[usize], objective: f64) {
        match slot {
            Some(b) if objective <= b.objective => {}
            _ => {
                *slot = Some(Best {
                    action: action.to_vec(),
                    objective,
                })
            }
        }
    }

    fn merge(a: Option<Best>, b: Option<Best>) -> Option<Best> {
        match (a, b) {
            (Some(x), Some(y)) => Some(if y.objective > x.objective { y } else { x }),
            (x, None) => x,
            (None, y) => y,
        }
    }
}

/// Enumerates all `N_power^M` joint actions and returns the feasible
/// maximizer of the FUE sum capacity, ties broken toward the
/// lexicographically smallest index vector.
pub fn exhaustive_search(env: &Environment, actions: &ActionSet, cap: u64) -> Result<OracleResult> {
    let m = env.femtocells();
    let n = actions.len();
    let count = joint_action_count(n, m);
    if m == 0 || count > cap as f64 {
        return Err(Error::EnumerationCap {
            n_power: n,
            agents: m,
            count,
            cap,
        });
    }
    let levels: Vec<f64> = (0..n).map(|k| actions.mw(k)).collect();

    // Split on the first femtocell's level; chunks are merged in index order.
    let partials: Vec<(Option<Best>, Option<Best>)> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; m];
            idx[0] = first;
            let mut powers = vec![0.0; m];
            let mut feasible: Option<Best> = None;
            let mut any: Option<Best> = None;
            loop {
                for (p, &k) in powers.iter_mut().zip(&idx) {
                    *p = levels[k];
                }
                let caps = env.evaluate(&powers);
                let obj = caps.sum_fue();
                if satisfies_qos(&caps, env) {
                    Best::offer(&mut feasible, &idx, obj);
                }
                Best::offer(&mut any, &idx, obj);
                // odometer over positions 1..m, last position fastest
                let mut pos = m;
                loop {
                    if pos == 1 {
                        return (feasible, any);
                    }
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] < n {
                        break;
                    }
                    idx[pos] = 0;
                }
            }
        })
        .collect();

    let (feasible, any) = partials
        .into_iter()
        .fold((None, None), |(f, a), (pf, pa)| {
            (Best::merge(f, pf), Best::merge(a, pa))
        });
    let is_feasible = feasible.is_some();
    let best = feasible.or(any).expect("at least one joint action");
    let powers: Vec<f64> = best.action.iter().map(|&k| levels[k]).collect();
    let caps = env.evaluate(&powers);
    Ok(OracleResult {
        best_action: JointAction(best.action),
        best_objective: best.objective,
        feasible: is_feasible,
        c_mue: caps.c_mue,
        c_fue: caps.c_fue,
        evaluated: count as u64,
    })
}

/// Relative shortfall of a learned solution against the oracle optimum.
pub fn optimality_gap(oracle_sum: f64, learned_sum: f64) -> f64 {
    (oracle_sum - learned_sum) / oracle_sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{GainMatrix, NoisePower};
    use crate::learning::make_action_set;
    use proptest::prelude::*;

    fn env(m: usize, gains: Vec<f64>, p_bs: f64, q: f64) -> Environment {
        Environment {
            gains: GainMatrix::from_raw(m, gains).unwrap(),
            p_bs_mw: p_bs,
            noise: NoisePower::from_mw(1.0).unwrap(),
            q_mue: q,
            q_fue: vec![q; m],
        }
    }

    // Oracle for the oracle: flat enumeration in lexicographic order, no
    // chunking, no early structure.
    fn reference(env: &Environment, actions: &ActionSet) -> (Vec<usize>, bool) {
        let m = env.femtocells();
        let n = actions.len();
        let total = n.pow(m as u32);
        let mut best: Option<(Vec<usize>, f64, bool)> = None;
        for code in 0..total {
            let mut idx = vec![0; m];
            let mut c = code;
            for pos in (0..m).rev() {
                idx[pos] = c % n;
                c /= n;
            }
            let p: Vec<f64> = idx.iter().map(|&k| actions.mw(k)).collect();
            let caps = env.evaluate(&p);
            let feas = satisfies_qos(&caps, env);
            let obj = caps.sum_fue();
            let better = match &best {
                None => true,
                Some((_, bo, bf)) => (feas && !bf) || (feas == *bf && obj > *bo),
            };
            if better {
                best = Some((idx, obj, feas));
            }
        }
        let (a, _, f) = best.unwrap();
        (a, f)
    }

    #[test]
    fn lone_transmitter_uses_max_power() {
        let actions = make_action_set(-20.0, 25.0, 31).unwrap();
        let mut e = env(1, vec![1e-3; 4], 0.0, 0.1);
        // silent macro: C_MUE = 0, so only a zero MUE target is attainable
        e.q_mue = 0.0;
        let r = exhaustive_search(&e, &actions, 1000).unwrap();
        assert_eq!(r.best_action, JointAction(vec![30]));
        assert!(r.feasible);
    }

    #[test]
    fn two_level_toy_instance() {
        // Unit gains, noise 1 mW, P_BS 1 mW, levels {0, 10} dBm = {1, 10} mW.
        //   joint    FUE SINRs       MUE SINR   sum C_FUE
        //   (0,0)    1/3, 1/3        1/3        2 log2(4/3)            = 0.830
        //   (0,1)    1/12, 10/3      1/12       log2(13/12)+log2(13/3) = 2.231
        //   (1,0)    10/3, 1/12      1/12       2.231
        //   (1,1)    10/12, 10/12    1/21       2 log2(22/12)          = 1.749
        let actions = make_action_set(0.0, 10.0, 2).unwrap();
        let lopsided = (13.0f64 / 12.0).log2() + (13.0f64 / 3.0).log2();

        let r = exhaustive_search(&env(2, vec![1.0; 9], 1.0, 0.1), &actions, 100).unwrap();
        assert_eq!(r.best_action, JointAction(vec![0, 1]));
        assert!((r.best_objective - lopsided).abs() < 1e-12);
        assert!(r.feasible);
        assert_eq!(r.evaluated, 4);

        // 0.2 b/s/Hz excludes the lopsided pairs (log2(13/12) = 0.115) and
        // (1,1) (MUE log2(22/21) = 0.067).
        let r = exhaustive_search(&env(2, vec![1.0; 9], 1.0, 0.2), &actions, 100).unwrap();
        assert_eq!(r.best_action, JointAction(vec![0, 0]));
        assert!((r.best_objective - 2.0 * (4.0f64 / 3.0).log2()).abs() < 1e-12);
        assert!(r.feasible);

        // The MUE never exceeds log2(4/3) = 0.415, so 0.5 is infeasible.
        let r = exhaustive_search(&env(2, vec![1.0; 9], 1.0, 0.5), &actions, 100).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.best_action, JointAction(vec![0, 1]));
    }

    #[test]
    fn cap_enforced() {
        let actions = make_action_set(-20.0, 25.0, 31).unwrap();
        let e = env(15, vec![1e-6; 256], 1.0, 1.0);
        match exhaustive_search(&e, &actions, 10_000_000) {
            Err(Error::EnumerationCap { n_power: 31, agents: 15, count, .. }) => {
                assert_eq!(count, 31f64.powi(15));
            }
            other => panic!("expected cap error, got {other:?}"),
        }
        assert_eq!(joint_action_count(32, 15), 2f64.powi(75));
    }

    #[test]
    fn gap_arithmetic() {
        assert_eq!(optimality_gap(10.0, 9.0), 0.1);
        assert_eq!(optimality_gap(4.0, 4.0), 0.0);
    }

    fn random_env(m: usize) -> impl Strategy<Value = Environment> {
        let side = (m + 1) * (m + 1);
        (
            proptest::collection::vec(1e-9f64..1e-5, side),
            0.0f64..5e3,
            0.05f64..1.5,
        )
            .prop_map(move |(g, p_bs, q)| {
                let mut e = env(m, g, p_bs, q);
                e.noise = NoisePower::from_mw(1e-9).unwrap();
                e
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn matches_flat_enumeration(e in random_env(3)) {
            let actions = make_action_set(-20.0, 25.0, 5).unwrap();
            let r = exhaustive_search(&e, &actions, 1000).unwrap();
            let (best, feasible) = reference(&e, &actions);
            prop_assert_eq!(r.best_action.0, best);
            prop_assert_eq!(r.feasible, feasible);
        }

        #[test]
        fn feasible_flag_recomputes(e in random_env(2)) {
            let actions = make_action_set(-20.0, 25.0, 6).unwrap();
            let r = exhaustive_search(&e, &actions, 1000).unwrap();
            let p: Vec<f64> = r.best_action.0.iter().map(|&k| actions.mw(k)).collect();
            let caps = e.evaluate(&p);
            if r.feasible {
                prop_assert!(satisfies_qos(&caps, &e));
            }
            prop_assert_eq!(caps.sum_fue(), r.best_objective);
        }

        #[test]
        fn permutation_equivariant(e in random_env(3), perm in Just(vec![0usize, 1, 2]).prop_shuffle()) {
            let actions = make_action_set(-20.0, 25.0, 5).unwrap();
            let base = exhaustive_search(&e, &actions, 1000).unwrap();
            let permuted = Environment {
                gains: e.gains.permuted(&perm).unwrap(),
                q_fue: perm.iter().map(|&k| e.q_fue[k]).collect(),
                ..e.clone()
            };
            let r = exhaustive_search(&permuted, &actions, 1000).unwrap();
            let expected: Vec<usize> = perm.iter().map(|&k| base.best_action.0[k]).collect();
            prop_assert!((r.best_objective - base.best_objective).abs() <= 1e-12 * base.best_objective.max(1.0));
            if r.best_action.0 != expected {
                // only an exact tie may let the lexicographic rule choose differently
                let p: Vec<f64> = expected.iter().map(|&k| actions.mw(k)).collect();
                let tied = permuted.evaluate(&p).sum_fue();
                prop_assert!((tied - r.best_objective).abs() <= 1e-12 * tied.max(1.0));
            }
            prop_assert_eq!(r.feasible, base.feasible);
        }
    }
}
