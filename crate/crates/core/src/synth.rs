//! Deterministic synthetic datasets with planted near-duplicate groups.
//!
//! The default fixture has four countries of 250 images each. Every country
//! contains six groups of ten near-duplicate images posted by a handful of
//! accounts, and two cross-country groups contribute two images per
//! country. The remaining images are independent random vectors.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{assemble, DatasetHandle, FeatureMatrix, ImageRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub countries: Vec<String>,
    pub images_per_country: usize,
    pub dim: usize,
    pub groups_per_country: usize,
    pub group_size: usize,
    pub cross_groups: usize,
    /// Members each cross-country group places in every country.
    pub cross_members_per_country: usize,
    pub accounts_per_country: usize,
    /// Per-component noise added to a group's base vector.
    pub group_noise: f32,
    /// Share of background images without an account id.
    pub unattributed_share: f64,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            countries: ["china", "iran", "russia", "venezuela"].map(String::from).to_vec(),
            images_per_country: 250,
            dim: 64,
            groups_per_country: 6,
            group_size: 10,
            cross_groups: 2,
            cross_members_per_country: 2,
            accounts_per_country: 24,
            group_noise: 0.01,
            unattributed_share: 0.05,
            seed: 2022,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub dataset: DatasetHandle,
    /// Rows of each planted group.
    pub groups: Vec<Vec<usize>>,
}

struct Draft {
    country: usize,
    account: Option<String>,
    vector: Vec<f32>,
    group: Option<usize>,
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect()
}

fn jitter(rng: &mut ChaCha8Rng, base: &[f32], noise: f32, exact: bool) -> Vec<f32> {
    if exact {
        return base.to_vec();
    }
    base.iter().map(|v| v + rng.random_range(-noise..=noise)).collect()
}

/// Generates the fixture described by `spec`.
///
/// # Panics
///
/// If the planted groups do not fit into `images_per_country`.
pub fn generate(spec: &FixtureSpec) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let planted = spec.groups_per_country * spec.group_size + spec.cross_groups * spec.cross_members_per_country;
    assert!(
        planted <= spec.images_per_country,
        "{planted} planted images exceed {} per country",
        spec.images_per_country
    );
    let account = |c: usize, a: usize| format!("{}-acct-{a:02}", spec.countries[c]);

    let mut per_country: Vec<Vec<Draft>> = (0..spec.countries.len()).map(|_| Vec::new()).collect();
    let mut group_id = 0;
    for (c, drafts) in per_country.iter_mut().enumerate() {
        for _ in 0..spec.groups_per_country {
            let base = random_vector(&mut rng, spec.dim);
            // Two or three accounts share each group.
            let first = rng.random_range(0..spec.accounts_per_country);
            let span = rng.random_range(2..=3);
            for m in 0..spec.group_size {
                drafts.push(Draft {
                    country: c,
                    account: Some(account(c, (first + m % span) % spec.accounts_per_country)),
                    vector: jitter(&mut rng, &base, spec.group_noise, m < 2),
                    group: Some(group_id),
                });
            }
            group_id += 1;
        }
    }
    for _ in 0..spec.cross_groups {
        let base = random_vector(&mut rng, spec.dim);
        for (c, drafts) in per_country.iter_mut().enumerate() {
            for _ in 0..spec.cross_members_per_country {
                let a = rng.random_range(0..spec.accounts_per_country);
                drafts.push(Draft {
                    country: c,
                    account: Some(account(c, a)),
                    vector: jitter(&mut rng, &base, spec.group_noise, false),
                    group: Some(group_id),
                });
            }
        }
        group_id += 1;
    }
    for (c, drafts) in per_country.iter_mut().enumerate() {
        while drafts.len() < spec.images_per_country {
            let attributed = !rng.random_bool(spec.unattributed_share);
            let a = rng.random_range(0..spec.accounts_per_country);
            drafts.push(Draft {
                country: c,
                account: attributed.then(|| account(c, a)),
                vector: random_vector(&mut rng, spec.dim),
                group: None,
            });
        }
        drafts.shuffle(&mut rng);
    }

    let mut records = Vec::new();
    let mut data = Vec::new();
    let mut groups = vec![Vec::new(); group_id];
    for drafts in per_country {
        for (i, d) in drafts.into_iter().enumerate() {
            let row = records.len();
            if let Some(g) = d.group {
                groups[g].push(row);
            }
            records.push(ImageRecord {
                image_id: format!("{}-{i:04}", spec.countries[d.country]),
                account_id: d.account,
                country: spec.countries[d.country].clone(),
                row,
            });
            data.extend(d.vector);
        }
    }
    let matrix = FeatureMatrix::new(spec.dim, data).expect("generated values are finite");
    Fixture {
        dataset: assemble(records, matrix).expect("generated records are consistent"),
        groups,
    }
}

/// Fraction of planted images that share a community with the majority
/// of their group.
pub fn planted_purity(groups: &[Vec<usize>], assignment: &[usize]) -> f64 {
    let mut agree = 0usize;
    let mut total = 0usize;
    for group in groups {
        let mut counts = std::collections::BTreeMap::new();
        for &row in group {
            *counts.entry(assignment[row]).or_insert(0usize) += 1;
        }
        agree += counts.values().max().copied().unwrap_or(0);
        total += group.len();
    }
    if total == 0 {
        1.0
    } else {
        agree as f64 / total as f64
    }
}
