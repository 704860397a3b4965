use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Split;

use super::IoError;

/// Reads `subject TAB train|val|test` rows.
pub fn load_split(text: &str) -> Result<HashMap<String, Split>, IoError> {
    let mut out = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.strip_suffix('\r').unwrap_or(raw);
        if l.trim().is_empty() || l.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != 2 || f[0].is_empty() {
            return Err(IoError::MalformedLine {
                line,
                reason: "expected subject id and split name".into(),
            });
        }
        let split: Split = f[1]
            .trim()
            .parse()
            .map_err(|reason| IoError::MalformedLine { line, reason })?;
        if out.insert(f[0].to_string(), split).is_some() {
            return Err(IoError::DuplicateSubject(f[0].to_string()));
        }
    }
    Ok(out)
}

pub fn serialize_split(ids: &[String], splits: &[Split]) -> String {
    ids.iter()
        .zip(splits)
        .map(|(id, s)| format!("{id}\t{s}\n"))
        .collect()
}

/// Per-class shuffled partition. Each class of size `n` gets
/// `round(n·val)` validation and `round(n·test)` test subjects and the rest go
/// to training; classes with fewer than 3 subjects go wholly to training.
/// Multilabel subjects are stratified by their lowest class index.
///
/// Returns the assignment plus one warning per undersized class.
pub fn stratified_split(
    labels: &[Vec<usize>],
    ratios: [f64; 3],
    seed: u64,
) -> Result<(Vec<Split>, Vec<String>), IoError> {
    if ratios.iter().any(|r| !(*r >= 0.0 && r.is_finite()))
        || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(IoError::InvalidRatios(format!(
            "{ratios:?} must be nonnegative and sum to 1"
        )));
    }
    let mut strata: BTreeMap<Option<usize>, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        strata.entry(l.iter().min().copied()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Split::Train; labels.len()];
    let mut warnings = Vec::new();
    for (class, mut members) in strata {
        let n = members.len();
        if n < 3 {
            let name = class.map_or("unlabeled".to_string(), |c| format!("class {c}"));
            let w = format!("{name} has {n} subjects; all assigned to train");
            log::warn!("{w}");
            warnings.push(w);
            continue;
        }
        members.shuffle(&mut rng);
        let n_val = (n as f64 * ratios[1]).round() as usize;
        let n_test = ((n as f64 * ratios[2]).round() as usize).min(n - n_val);
        for &i in &members[..n_val] {
            out[i] = Split::Val;
        }
        for &i in &members[n_val..n_val + n_test] {
            out[i] = Split::Test;
        }
    }
    Ok((out, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(s: &[Split]) -> [usize; 3] {
        let mut c = [0; 3];
        for x in s {
            c[*x as usize] += 1;
        }
        c
    }

    #[test]
    fn split_sizes() {
        let (s, w) = stratified_split(&vec![vec![0]; 10], [0.6, 0.2, 0.2], 1).unwrap();
        assert_eq!(counts(&s), [6, 2, 2]);
        assert!(w.is_empty());
        let (s, _) = stratified_split(&vec![vec![3]; 791], [0.6, 0.2, 0.2], 1).unwrap();
        assert_eq!(counts(&s), [475, 158, 158]);
        let mut l = vec![vec![0]; 10];
        l.extend([vec![1], vec![1]]);
        let (s, w) = stratified_split(&l, [0.6, 0.2, 0.2], 1).unwrap();
        assert_eq!(&s[10..], &[Split::Train, Split::Train]);
        assert_eq!(w.len(), 1);
        assert!(stratified_split(&l, [0.6, 0.2, 0.3], 1).is_err());
    }

    #[test]
    fn split_file_round_trip() {
        let ids: Vec<String> = vec!["a".into(), "b".into()];
        let text = serialize_split(&ids, &[Split::Train, Split::Test]);
        let m = load_split(&text).unwrap();
        assert_eq!(m["b"], Split::Test);
        assert!(matches!(
            load_split("a\tholdout\n"),
            Err(IoError::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            load_split("a\ttrain\na\ttest\n"),
            Err(IoError::DuplicateSubject(_))
        ));
    }

    proptest! {
        #[test]
        fn partition_deterministic_and_stratified(
            classes in proptest::collection::vec(0usize..4, 0..80),
            seed in 0u64..1000,
        ) {
            let labels: Vec<Vec<usize>> = classes.iter().map(|&c| vec![c]).collect();
            let (a, _) = stratified_split(&labels, [0.6, 0.2, 0.2], seed).unwrap();
            let (b, _) = stratified_split(&labels, [0.6, 0.2, 0.2], seed).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.len(), labels.len());
            for c in 0..4 {
                let idx: Vec<usize> = (0..labels.len()).filter(|&i| classes[i] == c).collect();
                let n = idx.len();
                if n < 3 {
                    continue;
                }
                let got = counts(&idx.iter().map(|&i| a[i]).collect::<Vec<_>>());
                for (k, r) in [0.6, 0.2, 0.2].iter().enumerate() {
                    prop_assert!((got[k] as f64 - n as f64 * r).abs() <= 1.0, "class {} {:?}", c, got);
                }
            }
        }
    }
}
