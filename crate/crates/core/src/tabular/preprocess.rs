use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tabular::{ColumnData, Dataset};

/// Learned per-feature transform.
#[derive(Clone, Debug, PartialEq)]
enum FeatureTransform {
    /// Median imputation then standardisation. `scale == None` marks a
    /// zero-variance column, which encodes as 0.
    Numeric {
        median: f64,
        mean: f64,
        scale: Option<f64>,
    },
    /// One-hot over the categories seen at fit time; missing cells take the
    /// fit-set mode, unseen categories encode as all zeros.
    Categorical { categories: Vec<u32>, mode: Option<u32> },
}

impl FeatureTransform {
    fn width(&self) -> usize {
        match self {
            FeatureTransform::Numeric { .. } => 1,
            FeatureTransform::Categorical { categories, .. } => categories.len(),
        }
    }
}

/// Fitted encoder: replays the same transform on any rows of the dataset it
/// was fitted on (or a dataset sharing its column layout and levels).
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    features: Vec<usize>,
    transforms: Vec<FeatureTransform>,
    groups: Vec<usize>,
    column_names: Vec<String>,
}

/// Design matrix with its target vector. `groups[j]` is the position, in
/// the encoder's feature list, of the source feature behind column `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub groups: Vec<usize>,
}

impl Encoder {
    pub fn fit(d: &Dataset, features: &[usize], fit_rows: &[usize]) -> Result<Encoder> {
        if fit_rows.is_empty() {
            return Err(Error::EmptyFit);
        }
        if let Some(&bad) = fit_rows.iter().find(|&&r| r >= d.n_rows()) {
            return Err(Error::RowOutOfRange(bad));
        }
        let mut transforms = Vec::with_capacity(features.len());
        let mut groups = Vec::new();
        let mut column_names = Vec::new();
        for (g, &f) in features.iter().enumerate() {
            if f >= d.n_features() {
                return Err(Error::UnknownFeature(format!("#{f}")));
            }
            let col = d.feature(f);
            let t = match &col.data {
                ColumnData::Numeric(v) => fit_numeric(v, fit_rows),
                ColumnData::Categorical { codes, .. } => fit_categorical(codes, fit_rows),
            };
            match (&t, &col.data) {
                (FeatureTransform::Categorical { categories, .. }, ColumnData::Categorical { levels, .. }) => {
                    for &c in categories {
                        column_names.push(format!("{}={}", col.name, levels[c as usize]));
                    }
                }
                _ => column_names.push(col.name.clone()),
            }
            groups.extend(core::iter::repeat(g).take(t.width()));
            transforms.push(t);
        }
        Ok(Encoder {
            features: features.to_vec(),
            transforms,
            groups,
            column_names,
        })
    }

    pub fn width(&self) -> usize {
        self.groups.len()
    }

    pub fn features(&self) -> &[usize] {
        &self.features
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn transform(&self, d: &Dataset, rows: &[usize]) -> Result<Matrix> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= d.n_rows()) {
            return Err(Error::RowOutOfRange(bad));
        }
        let mut x = Matrix::zeros(rows.len(), self.width());
        let mut offset = 0;
        for (&f, t) in self.features.iter().zip(&self.transforms) {
            let col = d.feature(f);
            match (t, &col.data) {
                (FeatureTransform::Numeric { median, mean, scale }, ColumnData::Numeric(v)) => {
                    for (i, &r) in rows.iter().enumerate() {
                        let raw = v[r].unwrap_or(*median);
                        let z = match scale {
                            Some(s) => (raw - mean) / s,
                            None => 0.0,
                        };
                        x.set(i, offset, z);
                    }
                }
                (FeatureTransform::Categorical { categories, mode }, ColumnData::Categorical { codes, .. }) => {
                    for (i, &r) in rows.iter().enumerate() {
                        if let Some(code) = codes[r].or(*mode) {
                            if let Ok(pos) = categories.binary_search(&code) {
                                x.set(i, offset + pos, 1.0);
                            }
                        }
                    }
                }
                _ => {
                    return Err(Error::InvalidDataset(format!(
                        "column `{}` changed kind since the encoder was fitted",
                        col.name
                    )))
                }
            }
            offset += t.width();
        }
        Ok(x)
    }

    pub fn design(&self, d: &Dataset, rows: &[usize]) -> Result<Design> {
        let x = self.transform(d, rows)?;
        let all = d.target_values();
        Ok(Design {
            x,
            y: rows.iter().map(|&r| all[r]).collect(),
            groups: self.groups.clone(),
        })
    }
}

fn fit_numeric(values: &[Option<f64>], rows: &[usize]) -> FeatureTransform {
    let mut present: Vec<f64> = rows.iter().filter_map(|&r| values[r]).collect();
    let median = median_of(&mut present).unwrap_or(0.0);
    let imputed: Vec<f64> = rows.iter().map(|&r| values[r].unwrap_or(median)).collect();
    let n = imputed.len() as f64;
    let mean = imputed.iter().sum::<f64>() / n;
    let var = imputed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    let scale = (std > 1e-12 * mean.abs().max(1.0)).then_some(std);
    FeatureTransform::Numeric { median, mean, scale }
}

fn fit_categorical(codes: &[Option<u32>], rows: &[usize]) -> FeatureTransform {
    let width = codes.iter().flatten().map(|&c| c as usize + 1).max().unwrap_or(0);
    let mut counts = alloc::vec![0usize; width];
    for &r in rows {
        if let Some(c) = codes[r] {
            counts[c as usize] += 1;
        }
    }
    // first maximum wins, i.e. the lowest code among ties
    let mode = counts
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .fold(None::<(usize, usize)>, |best, (c, &n)| match best {
            Some((_, bn)) if bn >= n => best,
            _ => Some((c, n)),
        })
        .map(|(c, _)| c as u32);
    let categories = (0..width as u32).filter(|&c| counts[c as usize] > 0).collect();
    FeatureTransform::Categorical { categories, mode }
}

fn median_of(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Fits an encoder for every feature on `fit_rows` and transforms those rows.
pub fn preprocess(d: &Dataset, fit_rows: &[usize]) -> Result<(Design, Encoder)> {
    let features: Vec<usize> = (0..d.n_features()).collect();
    let enc = Encoder::fit(d, &features, fit_rows)?;
    let design = enc.design(d, fit_rows)?;
    Ok((design, enc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Column, Task};
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn reg(cols: Vec<Column>, n: usize) -> Dataset {
        let y = (0..n).map(|i| Some(i as f64)).collect();
        Dataset::new("p", cols, Column::numeric("y", y).unwrap(), Task::Regression).unwrap()
    }

    #[test]
    fn standardises_with_population_variance() {
        let d = reg(vec![Column::numeric("x", vec![Some(1.0), Some(2.0), Some(3.0)]).unwrap()], 3);
        let (design, _) = preprocess(&d, &[0, 1, 2]).unwrap();
        // oracle: mean 2, population std sqrt(2/3)
        let std = libm::sqrt(2.0 / 3.0);
        let expect = [-1.0 / std, 0.0, 1.0 / std];
        for (i, e) in expect.iter().enumerate() {
            assert!((design.x.get(i, 0) - e).abs() < 1e-12);
        }
        assert!((design.x.get(0, 0) + 1.2247).abs() < 1e-4);
    }

    #[test]
    fn constant_column_encodes_to_zero() {
        let d = reg(vec![Column::numeric("c", vec![Some(5.0); 4]).unwrap()], 4);
        let (design, _) = preprocess(&d, &[0, 1, 2, 3]).unwrap();
        assert!(design.x.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_hot_and_unseen_category() {
        let d = reg(
            vec![Column::categorical("c", &[Some("a"), Some("b"), Some("a"), Some("z")])],
            4,
        );
        let enc = Encoder::fit(&d, &[0], &[0, 1, 2]).unwrap();
        assert_eq!(enc.width(), 2);
        assert_eq!(enc.column_names(), &["c=a".to_string(), "c=b".to_string()]);
        let x = enc.transform(&d, &[0, 1, 3]).unwrap();
        assert_eq!(x.row(0), &[1.0, 0.0]);
        assert_eq!(x.row(1), &[0.0, 1.0]);
        assert_eq!(x.row(2), &[0.0, 0.0]);
    }

    #[test]
    fn imputes_median_and_mode() {
        let d = reg(
            vec![
                Column::numeric("n", vec![Some(1.0), None, Some(3.0), Some(10.0)]).unwrap(),
                Column::categorical("c", &[Some("b"), Some("b"), None, Some("a")]),
            ],
            4,
        );
        let (_, enc) = preprocess(&d, &[0, 1, 2, 3]).unwrap();
        match &enc.transforms[0] {
            FeatureTransform::Numeric { median, .. } => assert_eq!(*median, 3.0),
            _ => unreachable!(),
        }
        let x = enc.transform(&d, &[2]).unwrap();
        // missing categorical takes the mode "b"
        assert_eq!(&x.row(0)[1..], &[0.0, 1.0]);
        assert_eq!(enc.groups(), &[0, 1, 1]);
    }

    #[test]
    fn empty_fit_rows_rejected() {
        let d = reg(vec![Column::numeric("x", vec![Some(1.0)]).unwrap()], 1);
        assert!(matches!(preprocess(&d, &[]), Err(Error::EmptyFit)));
    }

    proptest! {
        #[test]
        fn fit_rows_round_trip_to_unit_moments(
            vals in proptest::collection::vec(proptest::option::weighted(0.9, -1e3f64..1e3), 3..60)
        ) {
            let n = vals.len();
            prop_assume!(vals.iter().flatten().count() >= 2);
            let d = reg(vec![Column::numeric("x", vals.clone()).unwrap()], n);
            let rows: Vec<usize> = (0..n).collect();
            let (design, _) = preprocess(&d, &rows).unwrap();
            let col = design.x.column(0);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            prop_assert!(mean.abs() < 1e-9);
            if col.iter().any(|&v| v != 0.0) {
                prop_assert!((var - 1.0).abs() < 1e-9);
            }
        }
    }
}
