//! Pair manifests, ROC/FAR/FRR sweeps, EER, and the k-fold protocol.
//!
//! The headline metric is accuracy at EER: sweep the decision threshold
//! over the margin scores, find the operating point where the false accept
//! and false reject rates meet, and report `100 - (FAR + FRR) / 2`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boosting::{adaboost_train, PairLabel};
use crate::error::{Error, Result};
use crate::pipeline::{load_dataset, TrainConfig};

/// One experiment line: two image paths and whether they share an identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path1: PathBuf,
    pub path2: PathBuf,
    pub label: PairLabel,
    pub fold: Option<u32>,
}

/// A verification experiment: labeled image pairs, optionally pre-folded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairManifest {
    pub entries: Vec<ManifestEntry>,
    /// Set when the sampler had to reuse pairs because a pool ran dry.
    pub with_replacement: bool,
}

impl PairManifest {
    /// Parses the tab-separated manifest format:
    /// `path1<TAB>path2<TAB>{1|0}` with an optional fourth fold field.
    /// Lines starting with `#` are comments; the `# with_replacement`
    /// header marks a manifest sampled with replacement.
    pub fn parse(text: &str, origin: &Path) -> Result<PairManifest> {
        let mut manifest = PairManifest::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if comment.trim() == "with_replacement" {
                    manifest.with_replacement = true;
                }
                continue;
            }
            let mut fields = line.split('\t');
            let malformed = |reason: &str| Error::MalformedManifest {
                path: origin.to_path_buf(),
                line: lineno + 1,
                reason: reason.to_string(),
            };
            let path1 = fields.next().ok_or_else(|| malformed("missing path1"))?;
            let path2 = fields.next().ok_or_else(|| malformed("missing path2"))?;
            let label = match fields.next() {
                Some("1") => PairLabel::Same,
                Some("0") => PairLabel::Different,
                Some(other) => {
                    return Err(malformed(&format!("label must be 1 or 0, got {other:?}")))
                }
                None => return Err(malformed("missing label")),
            };
            let fold = match fields.next() {
                None => None,
                Some(field) => Some(
                    field
                        .parse::<u32>()
                        .map_err(|_| malformed(&format!("bad fold id {field:?}")))?,
                ),
            };
            manifest.entries.push(ManifestEntry {
                path1: PathBuf::from(path1),
                path2: PathBuf::from(path2),
                label,
                fold,
            });
        }
        Ok(manifest)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PairManifest> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.with_replacement {
            out.push_str("# with_replacement\n");
        }
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}",
                e.path1.display(),
                e.path2.display(),
                if e.label == PairLabel::Same { 1 } else { 0 }
            ));
            if let Some(fold) = e.fold {
                out.push_str(&format!("\t{fold}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|source| Error::Write {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// One image of an identity-labeled corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub identity: String,
    pub path: PathBuf,
}

/// Samples `n_pos` same-identity and `n_neg` cross-identity pairs,
/// uniformly without replacement, deterministically under `seed`. Falls
/// back to sampling with replacement (and flags the manifest) if a pool
/// runs dry. Positive pairs come first in the result.
pub fn build_pairs(
    corpus: &[CorpusEntry],
    n_pos: usize,
    n_neg: usize,
    seed: u64,
) -> Result<PairManifest> {
    let mut by_identity: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in corpus.iter().enumerate() {
        by_identity.entry(&e.identity).or_default().push(i);
    }

    let mut pos_pool: Vec<(usize, usize)> = Vec::new();
    for members in by_identity.values() {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                pos_pool.push((i, j));
            }
        }
    }
    let mut neg_pool: Vec<(usize, usize)> = Vec::new();
    for i in 0..corpus.len() {
        for j in i + 1..corpus.len() {
            if corpus[i].identity != corpus[j].identity {
                neg_pool.push((i, j));
            }
        }
    }
    if n_pos > 0 && pos_pool.is_empty() {
        return Err(Error::NoPositivePairs);
    }
    if n_neg > 0 && neg_pool.is_empty() {
        return Err(Error::NoNegativePairs);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut with_replacement = false;
    let mut draw = |pool: &mut Vec<(usize, usize)>, n: usize, rng: &mut ChaCha8Rng| {
        pool.shuffle(rng);
        let mut picked: Vec<(usize, usize)> = pool.iter().take(n).copied().collect();
        while picked.len() < n {
            with_replacement = true;
            picked.push(pool[rng.random_range(0..pool.len())]);
        }
        picked
    };
    let positives = draw(&mut pos_pool, n_pos, &mut rng);
    let negatives = draw(&mut neg_pool, n_neg, &mut rng);

    let entry = |&(i, j): &(usize, usize), label| ManifestEntry {
        path1: corpus[i].path.clone(),
        path2: corpus[j].path.clone(),
        label,
        fold: None,
    };
    let mut entries: Vec<ManifestEntry> =
        positives.iter().map(|p| entry(p, PairLabel::Same)).collect();
    entries.extend(negatives.iter().map(|p| entry(p, PairLabel::Different)));
    Ok(PairManifest {
        entries,
        with_replacement,
    })
}

/// Converts the common tab-separated LFW `pairs.txt` form into a manifest.
///
/// Expected layout: a header line `<k>\t<pairs_per_fold>` (a bare pair
/// count also occurs and is accepted), then per fold `pairs_per_fold`
/// same-identity lines `name\tidx1\tidx2` followed by `pairs_per_fold`
/// cross-identity lines `name1\tidx1\tname2\tidx2`. Images resolve to
/// `<root>/<name>/<name>_<idx padded to 4 digits>.<extension>` and each
/// block becomes one fold id. Historical format variants are out of scope.
pub fn convert_lfw_pairs(
    text: &str,
    image_root: &Path,
    extension: &str,
) -> Result<PairManifest> {
    let origin = Path::new("pairs.txt");
    let malformed = |line: usize, reason: &str| Error::MalformedManifest {
        path: origin.to_path_buf(),
        line,
        reason: reason.to_string(),
    };
    let image = |name: &str, idx: &str, line: usize| -> Result<PathBuf> {
        let idx: u32 = idx
            .parse()
            .map_err(|_| malformed(line, &format!("bad image index {idx:?}")))?;
        Ok(image_root.join(name).join(format!("{name}_{idx:04}.{extension}")))
    };

    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| malformed(1, "empty file"))?;
    let header_fields: Vec<&str> = header.trim().split('\t').collect();
    let per_fold: usize = header_fields
        .last()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| malformed(1, "header must end with the per-fold pair count"))?;
    if per_fold == 0 {
        return Err(malformed(1, "per-fold pair count must be positive"));
    }

    let mut manifest = PairManifest::default();
    let mut position = 0usize;
    for (lineno, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let fold = (position / (2 * per_fold)) as u32;
        let within = position % (2 * per_fold);
        let entry = match fields.as_slice() {
            [name, a, b] => {
                if within >= per_fold {
                    return Err(malformed(lineno + 1, "same-pair line in the different block"));
                }
                ManifestEntry {
                    path1: image(name, a, lineno + 1)?,
                    path2: image(name, b, lineno + 1)?,
                    label: PairLabel::Same,
                    fold: Some(fold),
                }
            }
            [name1, a, name2, b] => {
                if within < per_fold {
                    return Err(malformed(lineno + 1, "different-pair line in the same block"));
                }
                ManifestEntry {
                    path1: image(name1, a, lineno + 1)?,
                    path2: image(name2, b, lineno + 1)?,
                    label: PairLabel::Different,
                    fold: Some(fold),
                }
            }
            _ => return Err(malformed(lineno + 1, "expected 3 or 4 tab-separated fields")),
        };
        manifest.entries.push(entry);
        position += 1;
    }
    if position == 0 || !position.is_multiple_of(2 * per_fold) {
        return Err(malformed(
            position + 2,
            "pair count is not a whole number of folds",
        ));
    }
    Ok(manifest)
}

/// One swept operating point. Rates are percentages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
    pub tpr: f64,
}

/// Threshold sweep over margin scores with its EER operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Points in ascending threshold order; FAR non-increasing, FRR
    /// non-decreasing along the sweep.
    pub points: Vec<RocPoint>,
    /// Percent, the average of FAR and FRR at the EER threshold.
    pub eer: f64,
    /// `100 - eer`.
    pub accuracy_at_eer: f64,
    pub eer_threshold: f64,
}

impl RocCurve {
    /// CSV export with a `threshold,far,frr,tpr` header. Thresholds use
    /// scientific notation so the sweep sentinels stay compact.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,far,frr,tpr\n");
        for p in &self.points {
            out.push_str(&format!("{:e},{},{},{}\n", p.threshold, p.far, p.frr, p.tpr));
        }
        out
    }
}

/// Sentinel thresholds for the sweep, beyond any finite margin.
const SWEEP_SENTINEL: f64 = f64::MAX;

/// Sweeps classification thresholds over the scored pairs and locates the
/// EER point.
///
/// A pair is classified "same" when `margin >= threshold`. Candidate
/// thresholds are midpoints between consecutive distinct margins plus a
/// sentinel on each side; the EER point minimizes `|FAR - FRR|`, breaking
/// ties toward the smaller threshold, and the reported EER is the average
/// of the two rates there.
pub fn roc(scores: &[(f64, PairLabel)]) -> Result<RocCurve> {
    let total_pos = scores.iter().filter(|(_, l)| *l == PairLabel::Same).count();
    let total_neg = scores.len() - total_pos;
    if total_pos == 0 || total_neg == 0 {
        return Err(Error::SingleLabelScores);
    }

    let mut sorted: Vec<(f64, PairLabel)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Walk ascending margins; below_* counts entries strictly below the
    // candidate threshold.
    let mut points = Vec::new();
    let push_point = |threshold: f64, below_pos: usize, below_neg: usize, points: &mut Vec<RocPoint>| {
        let far = 100.0 * (total_neg - below_neg) as f64 / total_neg as f64;
        let frr = 100.0 * below_pos as f64 / total_pos as f64;
        points.push(RocPoint {
            threshold,
            far,
            frr,
            tpr: 100.0 - frr,
        });
    };

    push_point(-SWEEP_SENTINEL, 0, 0, &mut points);
    let mut below_pos = 0;
    let mut below_neg = 0;
    let mut i = 0;
    while i < sorted.len() {
        let value = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == value {
            match sorted[i].1 {
                PairLabel::Same => below_pos += 1,
                PairLabel::Different => below_neg += 1,
            }
            i += 1;
        }
        if i < sorted.len() {
            let next = sorted[i].0;
            let mut mid = (value + next) / 2.0;
            if mid <= value {
                mid = next;
            }
            push_point(mid, below_pos, below_neg, &mut points);
        }
    }
    push_point(SWEEP_SENTINEL, below_pos, below_neg, &mut points);

    let mut eer_index = 0;
    for (idx, p) in points.iter().enumerate() {
        if (p.far - p.frr).abs() < (points[eer_index].far - points[eer_index].frr).abs() {
            eer_index = idx;
        }
    }
    let at = points[eer_index];
    let eer = (at.far + at.frr) / 2.0;
    Ok(RocCurve {
        points,
        eer,
        accuracy_at_eer: 100.0 - eer,
        eer_threshold: at.threshold,
    })
}

/// FAR and FRR (percent) of the scored pairs at one fixed threshold.
pub fn error_rates_at(scores: &[(f64, PairLabel)], threshold: f64) -> (f64, f64) {
    let mut pos = 0usize;
    let mut neg = 0usize;
    let mut false_accepts = 0usize;
    let mut false_rejects = 0usize;
    for &(margin, label) in scores {
        match label {
            PairLabel::Same => {
                pos += 1;
                if margin < threshold {
                    false_rejects += 1;
                }
            }
            PairLabel::Different => {
                neg += 1;
                if margin >= threshold {
                    false_accepts += 1;
                }
            }
        }
    }
    let far = if neg == 0 { 0.0 } else { 100.0 * false_accepts as f64 / neg as f64 };
    let frr = if pos == 0 { 0.0 } else { 100.0 * false_rejects as f64 / pos as f64 };
    (far, frr)
}

/// Outcome of one held-out fold.
#[derive(Debug, Clone)]
pub struct FoldReport {
    pub fold: u32,
    pub n_train: usize,
    pub n_test: usize,
    /// ROC of the test scores with the threshold swept on the test set
    /// itself (the optimistic, in-sample EER).
    pub roc: RocCurve,
    /// Threshold fixed at the training set's EER point.
    pub train_eer_threshold: f64,
    /// `(FAR + FRR) / 2` on the test set at `train_eer_threshold`.
    pub eer_heldout: f64,
    pub accuracy_heldout: f64,
}

/// Aggregate of a k-fold run. `eer_insample` figures sweep the threshold
/// on each test fold; `heldout` figures fix it on the training folds.
#[derive(Debug, Clone)]
pub struct KfoldReport {
    pub folds: Vec<FoldReport>,
    pub mean_accuracy_at_eer: f64,
    pub std_accuracy_at_eer: f64,
    pub mean_accuracy_heldout: f64,
    pub std_accuracy_heldout: f64,
    /// Entries dropped by identity-disjoint assignment (pairs straddling
    /// two folds).
    pub dropped: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Identity proxy for manifest paths: the parent directory name. Corpora
/// laid out as `<root>/<identity>/<image>` get true identity-disjoint
/// folds; anything else degrades to directory-disjoint folds.
pub fn path_identity(path: &Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Assigns a fold to every entry. Entries keep pre-assigned folds when the
/// whole manifest carries them; otherwise folds are dealt round-robin over
/// a seeded shuffle. With `identity_disjoint`, identities (parent
/// directories) are dealt to folds instead and pairs straddling two folds
/// are dropped (`None`).
pub fn assign_folds(
    manifest: &PairManifest,
    k: usize,
    seed: u64,
    identity_disjoint: bool,
) -> Result<Vec<Option<u32>>> {
    if k < 2 {
        return Err(Error::InvalidFoldCount(k));
    }
    if !manifest.entries.is_empty() && manifest.entries.iter().all(|e| e.fold.is_some()) {
        let mut distinct: Vec<u32> = manifest.entries.iter().filter_map(|e| e.fold).collect();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() != k {
            return Err(Error::InvalidConfig(format!(
                "manifest has {} distinct folds, expected k = {k}",
                distinct.len()
            )));
        }
        return Ok(manifest.entries.iter().map(|e| e.fold).collect());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if identity_disjoint {
        let mut identities: Vec<String> = manifest
            .entries
            .iter()
            .flat_map(|e| [path_identity(&e.path1), path_identity(&e.path2)])
            .collect();
        identities.sort();
        identities.dedup();
        identities.shuffle(&mut rng);
        let fold_of: BTreeMap<&str, u32> = identities
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), (i % k) as u32))
            .collect();
        Ok(manifest
            .entries
            .iter()
            .map(|e| {
                let f1 = fold_of[path_identity(&e.path1).as_str()];
                let f2 = fold_of[path_identity(&e.path2).as_str()];
                (f1 == f2).then_some(f1)
            })
            .collect())
    } else {
        let mut indices: Vec<usize> = (0..manifest.entries.len()).collect();
        indices.shuffle(&mut rng);
        let mut folds = vec![None; manifest.entries.len()];
        for (position, &index) in indices.iter().enumerate() {
            folds[index] = Some((position % k) as u32);
        }
        Ok(folds)
    }
}

/// Runs the k-fold protocol: for each fold, train on the others, score it,
/// and report both EER conventions.
pub fn kfold_evaluate(
    manifest: &PairManifest,
    k: usize,
    config: &TrainConfig,
    identity_disjoint: bool,
) -> Result<KfoldReport> {
    let folds = assign_folds(manifest, k, config.seed, identity_disjoint)?;
    let kept: Vec<(&ManifestEntry, u32)> = manifest
        .entries
        .iter()
        .zip(&folds)
        .filter_map(|(e, f)| f.map(|f| (e, f)))
        .collect();
    let dropped = manifest.entries.len() - kept.len();

    let bank = config.bank()?;
    let entries: Vec<ManifestEntry> = kept.iter().map(|(e, _)| (*e).clone()).collect();
    let dataset = load_dataset(&entries, &bank)?;

    // pre-assigned manifests may use arbitrary fold ids
    let mut fold_ids: Vec<u32> = kept.iter().map(|(_, f)| *f).collect();
    fold_ids.sort_unstable();
    fold_ids.dedup();

    let mut reports = Vec::with_capacity(k);
    for fold in fold_ids {
        let train: Vec<_> = dataset
            .iter()
            .zip(&kept)
            .filter(|(_, (_, f))| *f != fold)
            .map(|(s, _)| s.clone())
            .collect();
        let test: Vec<_> = dataset
            .iter()
            .zip(&kept)
            .filter(|(_, (_, f))| *f == fold)
            .map(|(s, _)| s.clone())
            .collect();
        let single = |set: &[crate::boosting::LabeledPair]| {
            set.is_empty()
                || set.iter().all(|s| s.label == PairLabel::Same)
                || set.iter().all(|s| s.label == PairLabel::Different)
        };
        if single(&test) || single(&train) {
            return Err(Error::FoldSingleLabel { fold });
        }

        let model = adaboost_train(&train, &bank, config.rounds)?;
        let score_set = |set: &[crate::boosting::LabeledPair]| -> Result<Vec<(f64, PairLabel)>> {
            set.iter()
                .map(|s| Ok((model.score(&s.features)?, s.label)))
                .collect()
        };
        let train_scores = score_set(&train)?;
        let test_scores = score_set(&test)?;
        let train_roc = roc(&train_scores)?;
        let test_roc = roc(&test_scores)?;
        let (far, frr) = error_rates_at(&test_scores, train_roc.eer_threshold);
        let eer_heldout = (far + frr) / 2.0;
        reports.push(FoldReport {
            fold,
            n_train: train.len(),
            n_test: test.len(),
            roc: test_roc,
            train_eer_threshold: train_roc.eer_threshold,
            eer_heldout,
            accuracy_heldout: 100.0 - eer_heldout,
        });
    }

    let insample: Vec<f64> = reports.iter().map(|r| r.roc.accuracy_at_eer).collect();
    let heldout: Vec<f64> = reports.iter().map(|r| r.accuracy_heldout).collect();
    let (mean_accuracy_at_eer, std_accuracy_at_eer) = mean_std(&insample);
    let (mean_accuracy_heldout, std_accuracy_heldout) = mean_std(&heldout);
    Ok(KfoldReport {
        folds: reports,
        mean_accuracy_at_eer,
        std_accuracy_at_eer,
        mean_accuracy_heldout,
        std_accuracy_heldout,
        dropped,
    })
}
