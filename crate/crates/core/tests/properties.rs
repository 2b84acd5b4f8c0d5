mod oracles;

use std::collections::HashMap;

use proptest::prelude::*;
use sda_core::boost::{gbdt_fit, GbdtParams, TreeParams};
use sda_core::corpus::{split_known_unknown, AssociationMatrix, DiseaseDag, Pair};
use sda_core::eval::{pr_auc, roc_auc, stratified_kfold};
use sda_core::sampling::{apportion, balanced_set, kmeans, select_negatives, Clustering, KMeansParams};
use sda_core::similarity::{disease_semantic_similarity, gip_similarity, mesh_similarity, GipBandwidth, SimilarityMatrix};
use sda_core::svm::{distance_matrix, rbf_kernel, smo_train, SmoParams};

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn matrix() -> impl Strategy<Value = AssociationMatrix> {
    (2usize..8, 2usize..8).prop_flat_map(|(r, c)| {
        proptest::collection::vec(0u8..2, r * c)
            .prop_map(move |e| AssociationMatrix::new(ids("s", r), ids("d", c), e).unwrap())
    })
}

/// Random DAG: node `i` takes a random subset of nodes below it as parents.
fn dag() -> impl Strategy<Value = Vec<(String, String)>> {
    (2usize..=12).prop_flat_map(|n| {
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), n), n).prop_map(move |bits| {
            let mut edges = Vec::new();
            for i in 1..n {
                for j in 0..i {
                    if bits[i][j] && (j + 1 == i || bits[j][i]) {
                        edges.push((format!("t{i}"), format!("t{j}")));
                    }
                }
            }
            if edges.is_empty() {
                edges.push(("t1".to_string(), "t0".to_string()));
            }
            edges
        })
    })
}

fn profiles() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..7, 1usize..6).prop_flat_map(|(n, d)| {
        proptest::collection::vec(proptest::collection::vec(0u8..2, d), n)
            .prop_map(|rows| rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn association_csv_round_trips(am in matrix()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("am.csv");
        am.write_csv(&path).unwrap();
        let back = sda_core::corpus::load_association_matrix(&path).unwrap();
        prop_assert_eq!(&back, &am);
        prop_assert_eq!(back, sda_core::corpus::load_association_matrix(&path).unwrap());
    }

    #[test]
    fn known_and_unknown_partition_every_pair(am in matrix()) {
        let (k, u) = split_known_unknown(&am);
        prop_assert_eq!(k.len() + u.len(), am.n_snornas() * am.n_diseases());
        let mut all: Vec<Pair> = k.iter().chain(&u).copied().collect();
        all.sort();
        all.dedup();
        prop_assert_eq!(all.len(), am.n_snornas() * am.n_diseases());
        prop_assert!(k.iter().all(|&p| am.is_known(p)) && u.iter().all(|&p| !am.is_known(p)));
    }

    #[test]
    fn semantic_similarity_matches_path_enumeration(edges in dag()) {
        let d = DiseaseDag::from_edges(&edges, None).unwrap();
        let dss = disease_semantic_similarity(&d, 0.5).unwrap();
        let mut parents: HashMap<String, Vec<String>> = HashMap::new();
        for (c, p) in &edges {
            parents.entry(c.clone()).or_default().push(p.clone());
        }
        for (i, a) in dss.ids().iter().enumerate() {
            for (j, b) in dss.ids().iter().enumerate() {
                let want = oracles::enumerated_dss(&parents, a, b, 0.5);
                prop_assert!((dss.get(i, j) - want).abs() <= 1e-12, "{a},{b}: {} vs {want}", dss.get(i, j));
                prop_assert_eq!(dss.get(i, j).to_bits(), dss.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn gip_is_positive_unit_diagonal_and_monotone(p in profiles(), g in 0.01f64..5.0, dg in 0.0f64..5.0) {
        let names = ids("x", p.len());
        let lo = gip_similarity(&names, &p, GipBandwidth { gamma: g, gamma_prime: g });
        let hi = gip_similarity(&names, &p, GipBandwidth { gamma: g + dg, gamma_prime: g + dg });
        for i in 0..p.len() {
            prop_assert_eq!(lo.get(i, i), 1.0);
            for j in 0..p.len() {
                prop_assert!(lo.get(i, j) > 0.0);
                prop_assert_eq!(lo.get(i, j).to_bits(), lo.get(j, i).to_bits());
                prop_assert!(hi.get(i, j) <= lo.get(i, j));
            }
        }
    }

    #[test]
    fn meshed_matrix_is_complete_and_bounded(p in profiles(), mask in proptest::collection::vec(any::<bool>(), 64), vals in proptest::collection::vec(-1.0f64..1.0, 64)) {
        let n = p.len();
        let names = ids("x", n);
        let gip = gip_similarity(&names, &p, GipBandwidth { gamma: 1.0, gamma_prime: 1.0 });
        let base = SimilarityMatrix::from_pairwise(names, |i, j| {
            if i == j { Some(1.0) } else if mask[i * 8 + j] { Some(vals[i * 8 + j]) } else { None }
        });
        let m = mesh_similarity(&base, &gip).unwrap();
        prop_assert!(m.fully_available());
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                prop_assert!((0.0..=1.0).contains(&v));
                let want = match base.value(i, j) {
                    Some(b) => (b.max(0.0) + gip.get(i, j)) / 2.0,
                    None => gip.get(i, j),
                };
                prop_assert_eq!(v, want);
            }
        }
    }

    #[test]
    fn apportioned_selection_has_exact_size(sizes in proptest::collection::vec(0usize..15, 1..8), frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let total: usize = sizes.iter().sum();
        prop_assume!(total > 0);
        let n_pos = ((frac * total as f64) as usize).clamp(1, total);
        let quotas = apportion(&sizes, n_pos).unwrap();
        prop_assert_eq!(quotas.iter().sum::<usize>(), n_pos);
        prop_assert!(quotas.iter().zip(&sizes).all(|(q, s)| q <= s));

        let assignments: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &s)| std::iter::repeat(c).take(s)).collect();
        let clustering = Clustering {
            k: sizes.len(),
            assignments,
            centroids: vec![vec![0.0]; sizes.len()],
            inertia: 0.0,
            seed: 0,
            inertia_trace: vec![],
            iterations: 0,
            converged: true,
        };
        let negatives: Vec<Pair> = (0..total).map(|i| Pair::new(i, 0)).collect();
        let picked = select_negatives(&clustering, &negatives, n_pos, seed).unwrap();
        prop_assert_eq!(picked.len(), n_pos);
        let mut uniq = picked.clone();
        uniq.sort();
        uniq.dedup();
        prop_assert_eq!(uniq.len(), n_pos);
        prop_assert_eq!(&picked, &select_negatives(&clustering, &negatives, n_pos, seed).unwrap());

        let positives: Vec<Pair> = (0..n_pos).map(|i| Pair::new(i, 1)).collect();
        let set = balanced_set(&positives, &picked);
        prop_assert_eq!(set.iter().filter(|lp| lp.label == 1).count() * 2, set.len());
    }

    #[test]
    fn kmeans_inertia_never_rises_and_ends_at_fixed_point(
        pts in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 5..60),
        k in 1usize..6,
        seed in any::<u64>(),
    ) {
        prop_assume!(k <= pts.len());
        let params = KMeansParams { k, seed, max_iter: 200, tol: 0.0 };
        let c = kmeans(&pts, params).unwrap();
        for w in c.inertia_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
        }
        if c.converged {
            for (p, &a) in pts.iter().zip(&c.assignments) {
                let d = |q: &[f64]| p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
                let own = d(&c.centroids[a]);
                prop_assert!(c.centroids.iter().all(|q| d(q) >= own));
            }
        }
        prop_assert_eq!(c, kmeans(&pts, params).unwrap());
    }

    #[test]
    fn auc_ignores_monotone_transforms(scores in proptest::collection::vec(-3.0f64..3.0, 4..50), seed in any::<u64>()) {
        let labels: Vec<u8> = (0..scores.len()).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        let a = roc_auc(&scores, &labels).unwrap();
        let t: Vec<f64> = scores.iter().map(|s| (2.0 * s).exp() + 7.0).collect();
        prop_assert_eq!(a, roc_auc(&t, &labels).unwrap());
        prop_assert!((a - oracles::pair_count_auc(&scores, &labels)).abs() <= 1e-12);
        let rounded: Vec<f64> = scores.iter().map(|s| s.round()).collect();
        prop_assert!((roc_auc(&rounded, &labels).unwrap() - oracles::pair_count_auc(&rounded, &labels)).abs() <= 1e-12);
        prop_assert!((pr_auc(&rounded, &labels).unwrap() - oracles::step_sum_ap(&rounded, &labels)).abs() <= 1e-12);
    }

    #[test]
    fn stratified_folds_partition_and_balance(n_pos in 5usize..40, n_neg in 5usize..40, k in 2usize..6, seed in any::<u64>()) {
        let labels: Vec<u8> = std::iter::repeat(1).take(n_pos).chain(std::iter::repeat(0).take(n_neg)).collect();
        let plan = stratified_kfold(&labels, k, seed).unwrap();
        let mut seen = vec![0; labels.len()];
        for f in 0..k {
            let (train, test) = plan.split(f);
            prop_assert_eq!(train.len() + test.len(), labels.len());
            for &i in &test {
                seen[i] += 1;
            }
            let pos = test.iter().filter(|&&i| labels[i] == 1).count();
            prop_assert!(pos == n_pos / k || pos == n_pos / k + 1);
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn leaf_encoding_has_one_one_per_tree(
        x in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 3), 12..40),
        seed in any::<u64>(),
    ) {
        let y: Vec<u8> = (0..x.len()).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
        prop_assume!(y.contains(&0) && y.contains(&1));
        let params = GbdtParams { n_trees: 6, learning_rate: 0.3, tree: TreeParams { max_depth: 3, min_samples_leaf: 2, lambda: 1e-6 } };
        let m = gbdt_fit(&x, &y, params).unwrap();
        for w in m.loss_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
        for xi in &x {
            let e = m.leaf_encode(xi).unwrap();
            let mut offset = 0;
            for t in &m.trees {
                prop_assert_eq!(e[offset..offset + t.n_leaves].iter().filter(|&&v| v == 1.0).count(), 1);
                offset += t.n_leaves;
            }
            prop_assert_eq!(e.iter().filter(|&&v| v != 0.0 && v != 1.0).count(), 0);
        }
        prop_assert_eq!(m, gbdt_fit(&x, &y, params).unwrap());
    }

    #[test]
    fn svm_dual_is_feasible_and_sparse_decision_is_exact(
        x in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 2), 6..30),
        seed in any::<u64>(),
        c in prop::sample::select(vec![0.1, 1.0, 10.0]),
    ) {
        let y: Vec<u8> = (0..x.len()).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
        prop_assume!(y.contains(&0) && y.contains(&1));
        let m = smo_train(&x, &y, SmoParams { c, gamma: 0.5, tol: 1e-3, max_passes: 100, seed }).unwrap();
        let sum: f64 = m.support.iter().map(|sv| sv.alpha * sv.label).sum();
        prop_assert!(sum.abs() <= 1e-6);
        prop_assert!(m.support.iter().all(|sv| sv.alpha > 0.0 && sv.alpha <= c));
        for xi in &x {
            let full: f64 = m.support.iter().map(|sv| sv.alpha * sv.label * rbf_kernel(&sv.vector, xi, 0.5)).sum::<f64>() + m.bias;
            prop_assert!((m.decision(xi) - full).abs() <= 1e-12);
        }
        let d = distance_matrix(&x);
        let n = x.len();
        for i in 0..n {
            prop_assert_eq!((-0.5 * d[i * n + i]).exp(), 1.0);
            for j in 0..n {
                prop_assert_eq!(d[i * n + j].to_bits(), d[j * n + i].to_bits());
            }
        }
    }
}
