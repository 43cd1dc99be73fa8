use jip_core::{ClassifierKind, ClassifierSpec, Matrix};
use proptest::prelude::*;

fn kinds() -> impl Strategy<Value = ClassifierKind> {
    prop_oneof![Just(ClassifierKind::OneNn), Just(ClassifierKind::NearestCentroid)]
}

fn problem() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<u32>, Vec<f64>)> {
    (1usize..4, 1usize..12, 1usize..6).prop_flat_map(|(d, n, q)| {
        (
            Just(d),
            Just(n),
            // Small integer grid so exact distance ties actually occur.
            prop::collection::vec((-3i32..4).prop_map(f64::from), d * n),
            prop::collection::vec(1u32..4, n),
            prop::collection::vec((-3i32..4).prop_map(f64::from), d * q),
        )
    })
}

proptest! {
    #[test]
    fn training_order_does_not_matter(kind in kinds(), (d, n, x, y, q) in problem(), rot in 0usize..12) {
        let z = Matrix::from_vec(d, n, x).unwrap();
        let queries = Matrix::from_vec(d, q.len() / d, q).unwrap();
        let labels: Vec<_> = y.iter().map(|&c| Some(c)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.rotate_left(rot % n);
        order.reverse();
        let z2 = z.select_columns(&order);
        let l2: Vec<_> = order.iter().map(|&j| labels[j]).collect();
        let spec = ClassifierSpec::new(kind);
        let a = spec.train(&z, &labels).unwrap().predict(&queries).unwrap();
        let b = spec.train(&z2, &l2).unwrap().predict(&queries).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn query_permutation_is_equivariant(kind in kinds(), (d, n, x, y, q) in problem()) {
        let z = Matrix::from_vec(d, n, x).unwrap();
        let queries = Matrix::from_vec(d, q.len() / d, q).unwrap();
        let labels: Vec<_> = y.iter().map(|&c| Some(c)).collect();
        let model = ClassifierSpec::new(kind).train(&z, &labels).unwrap();
        let base = model.predict(&queries).unwrap();
        let perm: Vec<usize> = (0..queries.cols()).rev().collect();
        let permuted = model.predict(&queries.select_columns(&perm)).unwrap();
        let expect: Vec<u32> = perm.iter().map(|&j| base[j]).collect();
        prop_assert_eq!(permuted, expect);
    }

    #[test]
    fn one_nn_recovers_training_classes((d, n, x, y, _q) in problem()) {
        let z = Matrix::from_vec(d, n, x).unwrap();
        let labels: Vec<_> = y.iter().map(|&c| Some(c)).collect();
        let model = ClassifierSpec::new(ClassifierKind::OneNn).train(&z, &labels).unwrap();
        let pred = model.predict(&z).unwrap();
        for (j, &p) in pred.iter().enumerate() {
            // With duplicate points the lowest class among them wins.
            let col = z.column(j);
            let best = (0..n).filter(|&k| z.column(k) == col).map(|k| y[k]).min().unwrap();
            prop_assert_eq!(p, best);
        }
    }
}
