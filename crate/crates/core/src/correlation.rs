//! Demand frequencies and pairwise Jaccard similarity over an order history.
//!
//! Counting is presence based: a drug ordered in several units counts once
//! per order.

use crate::error::{Error, Result};
use crate::model::{DrugCatalog, DrugId, OrderHistory};
use std::io::Write;

/// Dense symmetric similarity matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    size: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            values: vec![0.0; size * size],
        }
    }

    /// Builds a matrix from a row-major square table. The diagonal is forced
    /// to zero; the table must be symmetric with entries in `[0, 1]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        let mut m = Self::zeros(size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::InvalidParameter(format!(
                    "similarity row {} has {} entries, expected {size}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if i == j {
                    continue;
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter(format!(
                        "similarity ({},{}) = {v} outside [0,1]",
                        i + 1,
                        j + 1
                    )));
                }
                if (v - rows[j][i]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "similarity not symmetric at ({},{})",
                        i + 1,
                        j + 1
                    )));
                }
                m.values[i * size + j] = v;
            }
        }
        Ok(m)
    }

    /// Sets both `(a, b)` and `(b, a)`. Ignored on the diagonal.
    pub fn set(&mut self, a: DrugId, b: DrugId, value: f64) {
        if a == b {
            return;
        }
        let (i, j) = (a.index(), b.index());
        self.values[i * self.size + j] = value;
        self.values[j * self.size + i] = value;
    }

    #[inline]
    pub fn get(&self, a: DrugId, b: DrugId) -> f64 {
        self.values[a.index() * self.size + b.index()]
    }

    #[inline]
    pub fn by_index(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.size..(i + 1) * self.size]
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    /// CSV dump: a header of drug ids, then one row per drug, six decimals.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.size).map(|i| i.to_string()).collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.size {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:.6}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn check_history(history: &OrderHistory, drug_count: usize) -> Result<()> {
    for order in &history.orders {
        if let Some(bad) = order
            .drugs()
            .find(|d| d.value() == 0 || d.index() >= drug_count)
        {
            return Err(Error::Ingestion {
                order: order.id,
                reason: format!("unknown drug id {bad}"),
            });
        }
    }
    Ok(())
}

/// Number of orders containing each drug, indexed by `DrugId::index`.
pub fn order_counts(history: &OrderHistory, drug_count: usize) -> Result<Vec<u64>> {
    check_history(history, drug_count)?;
    let mut counts = vec![0u64; drug_count];
    for order in &history.orders {
        for d in order.drugs() {
            counts[d.index()] += 1;
        }
    }
    Ok(counts)
}

/// Returns `catalog` with `f_k` set to the number of orders containing `k`.
pub fn compute_frequencies(history: &OrderHistory, catalog: &DrugCatalog) -> Result<DrugCatalog> {
    let counts = order_counts(history, catalog.len())?;
    Ok(catalog.with_frequencies(&counts))
}

/// `S = γ / (α + β + γ)` for every drug pair, with `S = 0` for pairs that
/// never appear.
pub fn jaccard_matrix(history: &OrderHistory, drug_count: usize) -> Result<SimilarityMatrix> {
    let single = order_counts(history, drug_count)?;
    let mut both = vec![0u32; drug_count * drug_count];
    let mut ids: Vec<usize> = Vec::new();
    for order in &history.orders {
        ids.clear();
        ids.extend(order.drugs().map(DrugId::index));
        for (n, &i) in ids.iter().enumerate() {
            for &j in &ids[n + 1..] {
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                both[lo * drug_count + hi] += 1;
            }
        }
    }
    let mut m = SimilarityMatrix::zeros(drug_count);
    for i in 0..drug_count {
        for j in i + 1..drug_count {
            let gamma = both[i * drug_count + j] as u64;
            // α + β + γ = f_i + f_j − γ
            let union = single[i] + single[j] - gamma;
            if gamma > 0 {
                let s = gamma as f64 / union as f64;
                m.values[i * drug_count + j] = s;
                m.values[j * drug_count + i] = s;
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{OrderLine, PrescriptionOrder};
    use proptest::prelude::*;

    fn history(orders: &[&[u32]]) -> OrderHistory {
        OrderHistory::new(
            orders
                .iter()
                .enumerate()
                .map(|(q, drugs)| {
                    PrescriptionOrder::new(
                        q as u64 + 1,
                        drugs
                            .iter()
                            .map(|&d| OrderLine {
                                drug: DrugId::new(d),
                                dosage: 1,
                            })
                            .collect(),
                    )
                    .unwrap()
                })
                .collect(),
        )
    }

    const A: DrugId = DrugId::new(1);
    const B: DrugId = DrugId::new(2);
    const C: DrugId = DrugId::new(3);

    #[test]
    fn frequencies_count_presence() {
        let h = history(&[&[1, 2], &[1], &[2, 3]]);
        let catalog = DrugCatalog::from_bin_counts(&[1, 1, 1, 1]).unwrap();
        let c = compute_frequencies(&h, &catalog).unwrap();
        let f: Vec<u64> = c.records().iter().map(|r| r.demand_frequency).collect();
        assert_eq!(f, vec![2, 2, 1, 0]);
        assert_eq!(c.get(A).unwrap().per_bin_frequency(), 2.0);
        assert_eq!(c.get(DrugId::new(4)).unwrap().per_bin_frequency(), 0.0);
    }

    #[test]
    fn per_bin_frequency_divides_by_bins() {
        let h = history(&[&[1u32][..]; 10]);
        let catalog = DrugCatalog::from_bin_counts(&[2]).unwrap();
        let c = compute_frequencies(&h, &catalog).unwrap();
        assert_eq!(c.get(A).unwrap().per_bin_frequency(), 5.0);
    }

    #[test]
    fn unknown_drug_names_the_order() {
        let h = history(&[&[1], &[5]]);
        let catalog = DrugCatalog::from_bin_counts(&[1, 1]).unwrap();
        let err = compute_frequencies(&h, &catalog).unwrap_err();
        assert!(matches!(err, Error::Ingestion { order: 2, .. }), "{err}");
    }

    #[test]
    fn jaccard_hand_example() {
        let h = history(&[&[1, 2], &[1], &[2, 3]]);
        let s = jaccard_matrix(&h, 3).unwrap();
        assert!((s.get(A, B) - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.get(B, C) - 0.5).abs() < 1e-15);
        assert_eq!(s.get(A, C), 0.0);
        assert_eq!(s.get(A, A), 0.0);
    }

    #[test]
    fn jaccard_extremes() {
        let h = history(&[&[1, 2], &[1, 2], &[3]]);
        let s = jaccard_matrix(&h, 4).unwrap();
        assert_eq!(s.get(A, B), 1.0);
        assert_eq!(s.get(A, C), 0.0);
        // drug 4 never ordered
        assert_eq!(s.get(A, DrugId::new(4)), 0.0);
    }

    #[test]
    fn csv_dump_shape() {
        let h = history(&[&[1, 2], &[1], &[2, 3]]);
        let s = jaccard_matrix(&h, 3).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "1,2,3");
        assert_eq!(lines[1], "0.000000,0.333333,0.000000");
    }

    #[test]
    fn from_rows_validates() {
        assert!(SimilarityMatrix::from_rows(&[vec![0.0, 0.5], vec![0.4, 0.0]]).is_err());
        assert!(SimilarityMatrix::from_rows(&[vec![0.0, 1.5], vec![1.5, 0.0]]).is_err());
        let m = SimilarityMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        assert_eq!(m.get(A, A), 0.0);
    }

    fn arb_orders() -> impl Strategy<Value = Vec<Vec<u32>>> {
        prop::collection::vec(
            prop::collection::btree_set(1u32..=6, 1..=4).prop_map(|s| s.into_iter().collect()),
            1..30,
        )
    }

    proptest! {
        #[test]
        fn invariant_under_permutation_and_duplication(orders in arb_orders(), rot in 0usize..30) {
            let refs: Vec<&[u32]> = orders.iter().map(Vec::as_slice).collect();
            let base = jaccard_matrix(&history(&refs), 6).unwrap();

            let mut rotated = refs.clone();
            let len = rotated.len();
            rotated.rotate_left(rot % len);
            rotated.reverse();
            prop_assert_eq!(&jaccard_matrix(&history(&rotated), 6).unwrap(), &base);

            let doubled: Vec<&[u32]> = refs.iter().chain(refs.iter()).copied().collect();
            prop_assert_eq!(&jaccard_matrix(&history(&doubled), 6).unwrap(), &base);

            for i in 0..6 {
                prop_assert_eq!(base.by_index(i, i), 0.0);
                for j in 0..6 {
                    let v = base.by_index(i, j);
                    prop_assert!((0.0..=1.0).contains(&v));
                    prop_assert_eq!(v, base.by_index(j, i));
                }
            }
        }
    }
}
