//! Deterministic property checks shared by the property and acceptance tests.
#![allow(dead_code)]

use hellfit::criterion::fitness_from_pmfs;
use hellfit::{
    alpha_generator, build_moving_partition, dual_generator, f_divergence, hellinger, symmetrized_alpha, Branching,
    Dataset64, MultinomialPmf, PartitionSpec, Verdict,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_pmf(rng: &mut impl Rng, len: usize, zero_prob: f64) -> MultinomialPmf<f64> {
    loop {
        let mut w: Vec<f64> = (0..len)
            .map(|_| if rng.random::<f64>() < zero_prob { 0.0 } else { rng.random::<f64>() })
            .collect();
        let total: f64 = w.iter().sum();
        if total == 0.0 {
            continue;
        }
        w.iter_mut().for_each(|x| *x /= total);
        let s: f64 = w.iter().sum();
        w[0] += 1.0 - s;
        if w[0] < 0.0 {
            continue;
        }
        return MultinomialPmf::new(w).expect("normalised");
    }
}

/// Non-negativity, identity, duality, symmetrization and the Hellinger
/// bounds on `pairs` random pairs and triples.
pub fn divergence_axioms(seed: u64, pairs: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphas = [-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0];
    for case in 0..pairs {
        let len = rng.random_range(2..12);
        let zero = if case % 3 == 0 { 0.2 } else { 0.0 };
        let a = random_pmf(&mut rng, len, zero);
        let b = random_pmf(&mut rng, len, zero);
        let c = random_pmf(&mut rng, len, zero);
        for &alpha in &alphas {
            let f = alpha_generator(alpha);
            let d = f_divergence(&f, &a, &b).unwrap();
            if !(d >= 0.0) {
                return Err(format!("case {case}: D_{alpha} = {d} < 0"));
            }
            let self_d = f_divergence(&f, &a, &a).unwrap();
            if self_d.abs() >= 1e-12 {
                return Err(format!("case {case}: D_{alpha}[a:a] = {self_d}"));
            }
            let dual = f_divergence(&dual_generator(&f), &a, &b).unwrap();
            let swapped = f_divergence(&f, &b, &a).unwrap();
            let same = (dual.is_infinite() && swapped.is_infinite()) || (dual - swapped).abs() <= 1e-12 * swapped.abs().max(1.0);
            if !same {
                return Err(format!("case {case}: duality for alpha {alpha}: {dual} vs {swapped}"));
            }
            let s1 = symmetrized_alpha(alpha, &a, &b).unwrap();
            let s2 = symmetrized_alpha(alpha, &b, &a).unwrap();
            let sym = (s1.is_infinite() && s2.is_infinite()) || (s1 - s2).abs() <= 1e-12 * s1.abs().max(1.0);
            if !sym {
                return Err(format!("case {case}: symmetrized alpha {alpha}: {s1} vs {s2}"));
            }
        }
        let max_diff = a.probs().iter().zip(b.probs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let (hab, hbc, hac) = (hellinger(&a, &b).unwrap(), hellinger(&b, &c).unwrap(), hellinger(&a, &c).unwrap());
        if max_diff > 0.0 && !(hab > 0.0) {
            return Err(format!("case {case}: distinct pmfs with zero distance"));
        }
        if hac.sqrt() > hab.sqrt() + hbc.sqrt() + 1e-12 {
            return Err(format!("case {case}: triangle inequality fails"));
        }
        for h in [hab, hbc, hac] {
            if !(0.0..=4.0 + 1e-12).contains(&h) {
                return Err(format!("case {case}: hellinger {h} outside [0, 4]"));
            }
        }
        let disjoint = a.probs().iter().zip(b.probs()).all(|(x, y)| *x == 0.0 || *y == 0.0);
        if disjoint != ((hab - 4.0).abs() < 1e-12) {
            return Err(format!("case {case}: hellinger = 4 iff disjoint fails ({hab})"));
        }
        let via_f = f_divergence(&alpha_generator(0.0), &a, &b).unwrap();
        if (via_f - hab).abs() > 1e-12 {
            return Err(format!("case {case}: hellinger {hab} vs alpha-0 divergence {via_f}"));
        }
    }
    // disjoint supports reach the maximum
    let a = MultinomialPmf::new(vec![0.5, 0.5, 0.0]).unwrap();
    let b = MultinomialPmf::new(vec![0.0, 0.0, 1.0]).unwrap();
    if hellinger(&a, &b).unwrap() != 4.0 {
        return Err("disjoint supports do not give 4".into());
    }
    Ok(())
}

fn random_spec(rng: &mut ChaCha8Rng, k: usize) -> PartitionSpec {
    let depth = rng.random_range(1..=k);
    let mut axes: Vec<usize> = (0..k).collect();
    axes.shuffle(rng);
    let branching = if rng.random::<bool>() {
        Branching::Uniform(rng.random_range(2..5))
    } else {
        Branching::PerLevel((0..depth).map(|_| rng.random_range(2..5)).collect())
    };
    PartitionSpec {
        depth,
        branching,
        axis_order: Some(axes),
    }
}

/// Coverage, exclusivity and row-permutation invariance on random trees.
pub fn partition_properties(seed: u64, trees: usize, points: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trees {
        let k = rng.random_range(1..=4);
        let spec = random_spec(&mut rng, k);
        let n = rng.random_range(300..1500);
        // a coarse grid makes ties at cut points common
        let coarse = t % 4 == 0;
        let values: Vec<f64> = (0..n * k)
            .map(|_| {
                let x: f64 = rng.random::<f64>() * 6.0 - 3.0;
                if coarse { (x * 4.0).round() / 4.0 } else { x }
            })
            .collect();
        let sample = Dataset64::new(values.clone(), n, k).unwrap();
        let tree = build_moving_partition(&sample, &spec).map_err(|e| format!("tree {t}: {e}"))?;

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let permuted: Vec<f64> = order.iter().flat_map(|&r| values[r * k..(r + 1) * k].to_vec()).collect();
        let tree2 = build_moving_partition(&Dataset64::new(permuted, n, k).unwrap(), &spec).unwrap();
        if tree2.leaves() != tree.leaves() {
            return Err(format!("tree {t}: row permutation changed the tree"));
        }

        let counts = tree.count_into_bins(&sample).unwrap();
        if counts.counts != tree.building_counts().unwrap().counts || counts.total != n as u64 {
            return Err(format!("tree {t}: recounting the building sample disagrees"));
        }

        let leaves = tree.leaves();
        for q in 0..points {
            let p: Vec<f64> = (0..k)
                .map(|_| {
                    if q % 5 == 0 {
                        // reuse a sample coordinate to land on cut points
                        values[rng.random_range(0..n) * k + rng.random_range(0..k)]
                    } else {
                        rng.random::<f64>() * 8.0 - 4.0
                    }
                })
                .collect();
            let id = tree.locate(&p);
            let inside = |leaf: &hellfit::partition::Leaf<f64>| leaf.intervals.iter().all(|iv| iv.contains(p[iv.axis]));
            if !inside(&leaves[id]) {
                return Err(format!("tree {t}: point {p:?} not inside its leaf {id}"));
            }
            let holders = leaves.iter().filter(|l| inside(l)).count();
            if holders != 1 {
                return Err(format!("tree {t}: point {p:?} inside {holders} leaves"));
            }
        }
    }
    Ok(())
}

/// Exact-arithmetic invariants of the fitness report on random inputs.
pub fn report_invariants(seed: u64, cases: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let bins = rng.random_range(2..200);
        let n1 = rng.random_range(1..100_000u64);
        let n2 = rng.random_range(1..100_000_000u64);
        let mother = random_pmf(&mut rng, bins, 0.1);
        let model = MultinomialPmf::uniform(bins).unwrap();
        let eps = rng.random_range(1e-4..0.4999);
        let r = fitness_from_pmfs(&mother, &model, n1, n2, eps).map_err(|e| e.to_string())?;
        let ok = r.lhs == r.hellinger_hat + r.bias_n1 + r.bias_n2
            && (r.verdict == Verdict::Close) == (r.lhs < r.threshold)
            && r.threshold == 8.0 * eps * eps
            && r.implied_epsilon == (r.lhs / 8.0).sqrt()
            && r.implied_bayes_error == 0.5 - r.implied_epsilon
            && r.p_prime == (bins - 1) as u64
            && r.bias_n1 == r.p_prime as f64 / (2.0 * n1 as f64)
            && r.bias_n2 == (8.0 * r.p_prime as f64 / n2 as f64).sqrt()
            && (0.0..=4.0).contains(&r.hellinger_hat)
            && r.zero_bins == mother.probs().iter().filter(|p| **p == 0.0).count() as u64;
        if !ok {
            return Err(format!("case {case}: report invariants fail: {r:?}"));
        }
    }
    Ok(())
}
