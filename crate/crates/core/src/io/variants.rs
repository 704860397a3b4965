use std::collections::BTreeMap;

use super::IoError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantRecord {
    pub subject: String,
    pub gene: String,
    pub alt_depth: i64,
    pub ref_depth: i64,
    pub pass: bool,
}

/// Per-gene mutation rate of one subject: summed alt depth over summed total
/// depth across the subject's passing variants. Genes with zero total depth
/// are omitted.
pub fn aggregate_variants(
    records: &[VariantRecord],
    subject: &str,
) -> Result<BTreeMap<String, f64>, IoError> {
    let mut sums: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.subject == subject) {
        if r.alt_depth < 0 || r.ref_depth < 0 {
            return Err(IoError::InvalidDepth(format!(
                "{} {}: alt {} ref {}",
                r.subject, r.gene, r.alt_depth, r.ref_depth
            )));
        }
        if !r.pass {
            continue;
        }
        let e = sums.entry(r.gene.clone()).or_default();
        e.0 += r.alt_depth as u64;
        e.1 += r.ref_depth as u64;
    }
    Ok(sums
        .into_iter()
        .filter(|(_, (a, r))| a + r > 0)
        .map(|(g, (a, r))| (g, a as f64 / (a + r) as f64))
        .collect())
}

/// Reads `subject TAB gene TAB alt_depth TAB ref_depth TAB filter` rows; a
/// record passes when its filter is `PASS`. `#` lines are comments.
pub fn parse_variants(text: &str) -> Result<Vec<VariantRecord>, IoError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let bad = |reason: &str| IoError::MalformedLine {
            line: i + 1,
            reason: reason.into(),
        };
        if f.len() != 5 {
            return Err(bad("expected 5 tab-separated fields"));
        }
        let depth = |s: &str| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| bad("depth is not an integer"))
        };
        out.push(VariantRecord {
            subject: f[0].to_string(),
            gene: f[1].to_string(),
            alt_depth: depth(f[2])?,
            ref_depth: depth(f[3])?,
            pass: f[4].trim() == "PASS",
        });
    }
    Ok(out)
}
