use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::signal::{ClassLabel, Dataset};

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    /// Share of all rows held out for testing.
    pub test_fraction: f64,
    /// Share of the remaining training rows held out for validation.
    pub validation_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.20,
            validation_fraction: 0.10,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let open = |f: f64| f > 0.0 && f < 1.0;
        if !open(self.test_fraction) || !open(self.validation_fraction) {
            return Err(Error::Config(format!(
                "split fractions must lie in (0, 1): test {}, validation {}",
                self.test_fraction, self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// Row indices into the source dataset for each partition, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub sub_train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub sub_train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub indices: SplitIndices,
}

/// Partition sizes for `n` rows: `(sub_train, validation, test)`.
fn partition_sizes(n: usize, spec: &SplitSpec) -> (usize, usize, usize) {
    let test = (n as f64 * spec.test_fraction).round() as usize;
    let rest = n - test.min(n);
    let validation = (rest as f64 * spec.validation_fraction).round() as usize;
    (
        rest - validation.min(rest),
        validation.min(rest),
        test.min(n),
    )
}

fn assign(
    mut group: Vec<usize>,
    spec: &SplitSpec,
    rng: &mut ChaCha8Rng,
    what: &str,
    out: &mut SplitIndices,
) -> Result<()> {
    let (n_sub, n_val, n_test) = partition_sizes(group.len(), spec);
    if n_sub == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::Stratification(format!(
            "{what} has {} rows, too few for non-empty sub-train/validation/test partitions \
             ({n_sub}/{n_val}/{n_test})",
            group.len()
        )));
    }
    group.shuffle(rng);
    out.test.extend_from_slice(&group[..n_test]);
    out.validation
        .extend_from_slice(&group[n_test..n_test + n_val]);
    out.sub_train.extend_from_slice(&group[n_test + n_val..]);
    Ok(())
}

/// Splits into sub-train / validation / test. Deterministic for a seed;
/// stratified splits round each class's share independently.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyInput("cannot split an empty dataset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut indices = SplitIndices {
        sub_train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    if spec.stratified {
        for class in ClassLabel::ALL {
            let group: Vec<usize> = (0..dataset.len())
                .filter(|&i| dataset.labels()[i] == class)
                .collect();
            if group.is_empty() {
                continue;
            }
            assign(
                group,
                spec,
                &mut rng,
                &format!("class {class}"),
                &mut indices,
            )?;
        }
    } else {
        assign(
            (0..dataset.len()).collect(),
            spec,
            &mut rng,
            "the dataset",
            &mut indices,
        )?;
    }
    indices.sub_train.sort_unstable();
    indices.validation.sort_unstable();
    indices.test.sort_unstable();

    Ok(Split {
        sub_train: dataset.select(&indices.sub_train),
        validation: dataset.select(&indices.validation),
        test: dataset.select(&indices.test),
        indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::N_FEATURES;

    fn balanced(per_class: usize) -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for class in ClassLabel::ALL {
            for i in 0..per_class {
                rows.push([i as f64; N_FEATURES]);
                labels.push(class);
            }
        }
        Dataset::new(rows, labels).unwrap()
    }

    #[test]
    fn reference_split_sizes() {
        let s = split(&balanced(1200), &SplitSpec::default()).unwrap();
        assert_eq!(
            (s.sub_train.len(), s.validation.len(), s.test.len()),
            (2592, 288, 720)
        );
        assert_eq!(s.test.class_counts(), [240; 3]);
        assert_eq!(s.validation.class_counts(), [96; 3]);
        assert_eq!(s.sub_train.class_counts(), [864; 3]);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let ds = balanced(50);
        let a = split(&ds, &SplitSpec::default()).unwrap();
        let b = split(&ds, &SplitSpec::default()).unwrap();
        assert_eq!(a.indices, b.indices);
        let c = split(
            &ds,
            &SplitSpec {
                seed: 9,
                ..SplitSpec::default()
            },
        )
        .unwrap();
        assert_ne!(a.indices, c.indices);
    }

    #[test]
    fn tiny_class_fails_stratification() {
        assert!(matches!(
            split(&balanced(2), &SplitSpec::default()),
            Err(Error::Stratification(_))
        ));
    }

    #[test]
    fn non_stratified_partitions_everything() {
        let ds = balanced(40);
        let s = split(
            &ds,
            &SplitSpec {
                stratified: false,
                ..SplitSpec::default()
            },
        )
        .unwrap();
        assert_eq!(s.sub_train.len() + s.validation.len() + s.test.len(), 120);
        assert_eq!(s.test.len(), 24);
        assert_eq!(s.validation.len(), 10);
    }

    #[test]
    fn rejects_bad_fractions_and_empty_input() {
        let spec = SplitSpec {
            test_fraction: 1.0,
            ..SplitSpec::default()
        };
        assert!(split(&balanced(10), &spec).is_err());
        assert!(matches!(
            split(&Dataset::empty(), &SplitSpec::default()),
            Err(Error::EmptyInput(_))
        ));
    }
}
