//! Per-class intersection-over-union, aggregation across images, and
//! table emission (CSV and Markdown in the published layout).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::types::{LabelMask, CLASS_DISPLAY_NAMES, CLASS_NAMES, N_CLASSES};

/// Raw per-class overlap counts for one mask pair.
#[derive(Debug, Clone, Copy, Default)]
pub struct IouCounts {
    pub intersection: [u64; N_CLASSES],
    pub union: [u64; N_CLASSES],
}

/// Per-class IOU in [0, 1]. A class absent from both masks is vacuous:
/// its IOU is defined as 1.0 and flagged.
#[derive(Debug, Clone, Copy)]
pub struct IouVector {
    pub iou: [f64; N_CLASSES],
    pub vacuous: [bool; N_CLASSES],
}

impl IouVector {
    pub fn mean(&self) -> f64 {
        self.iou.iter().sum::<f64>() / N_CLASSES as f64
    }
}

/// Count intersections and unions per class. Symmetric in its arguments.
pub fn iou_counts(pred: &LabelMask, reference: &LabelMask) -> Result<IouCounts> {
    if (pred.height, pred.width) != (reference.height, reference.width) {
        return Err(Error::Shape(format!(
            "mask shapes differ: {}x{} vs {}x{}",
            pred.height, pred.width, reference.height, reference.width
        )));
    }
    let mut counts = IouCounts::default();
    for (&p, &r) in pred.classes.iter().zip(&reference.classes) {
        let (p, r) = (p as usize, r as usize);
        if p == r {
            counts.intersection[p] += 1;
            counts.union[p] += 1;
        } else {
            counts.union[p] += 1;
            counts.union[r] += 1;
        }
    }
    Ok(counts)
}

fn counts_to_vector(counts: &IouCounts) -> IouVector {
    let mut iou = [0.0; N_CLASSES];
    let mut vacuous = [false; N_CLASSES];
    for c in 0..N_CLASSES {
        if counts.union[c] == 0 {
            iou[c] = 1.0;
            vacuous[c] = true;
        } else {
            iou[c] = counts.intersection[c] as f64 / counts.union[c] as f64;
        }
    }
    IouVector { iou, vacuous }
}

/// Per-class IOU for one mask pair.
pub fn iou_per_class(pred: &LabelMask, reference: &LabelMask) -> Result<IouVector> {
    Ok(counts_to_vector(&iou_counts(pred, reference)?))
}

/// How per-image results combine into one table column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    /// Sum intersections and unions over all images, then divide. Robust
    /// for thin layers that occupy few pixels per tile. The default.
    PoolPixels,
    /// Average per-image IOUs, skipping vacuous classes per image.
    MeanOverImages,
}

impl std::fmt::Display for Aggregate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Aggregate::PoolPixels => "pool_pixels",
            Aggregate::MeanOverImages => "mean_over_images",
        })
    }
}

/// Combine per-image counts into a per-class vector.
pub fn aggregate_iou(per_image: &[IouCounts], strategy: Aggregate) -> Result<IouVector> {
    if per_image.is_empty() {
        return Err(Error::Data("cannot aggregate an empty IOU list".into()));
    }
    match strategy {
        Aggregate::PoolPixels => {
            let mut pooled = IouCounts::default();
            for c in per_image {
                for k in 0..N_CLASSES {
                    pooled.intersection[k] += c.intersection[k];
                    pooled.union[k] += c.union[k];
                }
            }
            Ok(counts_to_vector(&pooled))
        }
        Aggregate::MeanOverImages => {
            let mut iou = [0.0; N_CLASSES];
            let mut vacuous = [false; N_CLASSES];
            for k in 0..N_CLASSES {
                let mut sum = 0.0;
                let mut n = 0usize;
                for c in per_image {
                    if c.union[k] > 0 {
                        sum += c.intersection[k] as f64 / c.union[k] as f64;
                        n += 1;
                    }
                }
                if n == 0 {
                    iou[k] = 1.0;
                    vacuous[k] = true;
                } else {
                    iou[k] = sum / n as f64;
                }
            }
            Ok(IouVector { iou, vacuous })
        }
    }
}

/// One table column: a compared pair or a model, with per-class IOU
/// percentages in class order.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ReportColumn {
    pub name: String,
    /// Percentages in [0, 100], fixed class order.
    pub iou_pct: [f64; N_CLASSES],
    #[serde(default)]
    pub vacuous: [bool; N_CLASSES],
}

#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct ReportMeta {
    pub dataset_id: String,
    pub n_images: usize,
    /// Left empty by default so emitted bytes stay deterministic.
    #[serde(default)]
    pub timestamp: String,
    #[serde(default)]
    pub aggregation: Option<Aggregate>,
}

/// Per-class IOU values for one or more compared pairs.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EvalReport {
    pub columns: Vec<ReportColumn>,
    pub metadata: ReportMeta,
}

impl EvalReport {
    pub fn column_from_vector(name: impl Into<String>, v: &IouVector) -> ReportColumn {
        let mut iou_pct = [0.0; N_CLASSES];
        for (dst, src) in iou_pct.iter_mut().zip(&v.iou) {
            *dst = src * 100.0;
        }
        ReportColumn { name: name.into(), iou_pct, vacuous: v.vacuous }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// Inter-observer agreement: one column per unordered grader pair, in
/// sorted grader order, so renaming graders only permutes columns.
pub fn interobserver_table(
    masks_by_grader: &BTreeMap<String, Vec<LabelMask>>,
    strategy: Aggregate,
) -> Result<EvalReport> {
    if masks_by_grader.len() < 2 {
        return Err(Error::Data("inter-observer table needs at least 2 graders".into()));
    }
    let n_images = masks_by_grader.values().next().map(Vec::len).unwrap_or(0);
    if n_images == 0 || masks_by_grader.values().any(|m| m.len() != n_images) {
        return Err(Error::Data("grader mask lists are empty or misaligned".into()));
    }
    let graders: Vec<&String> = masks_by_grader.keys().collect();
    let mut columns = Vec::new();
    for i in 0..graders.len() {
        for j in i + 1..graders.len() {
            let (ga, gb) = (graders[i], graders[j]);
            let counts: Vec<IouCounts> = masks_by_grader[ga]
                .iter()
                .zip(&masks_by_grader[gb])
                .map(|(a, b)| iou_counts(a, b))
                .collect::<Result<_>>()?;
            let vector = aggregate_iou(&counts, strategy)?;
            columns.push(EvalReport::column_from_vector(format!("{ga} vs {gb}"), &vector));
        }
    }
    Ok(EvalReport {
        columns,
        metadata: ReportMeta {
            dataset_id: "interobserver".into(),
            n_images,
            timestamp: String::new(),
            aggregation: Some(strategy),
        },
    })
}

/// Render a report. CSV carries numeric percentages at full precision;
/// Markdown prints one decimal with a trailing percent sign, matching the
/// published tables.
pub fn emit_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("class");
            for col in &report.columns {
                out.push(',');
                out.push_str(&col.name);
            }
            out.push('\n');
            for c in 0..N_CLASSES {
                out.push_str(CLASS_NAMES[c]);
                for col in &report.columns {
                    out.push(',');
                    out.push_str(&format!("{}", col.iou_pct[c]));
                }
                out.push('\n');
            }
            out
        }
        ReportFormat::Markdown => {
            let mut out = String::from("| Layer |");
            for col in &report.columns {
                out.push_str(&format!(" {} |", col.name));
            }
            out.push('\n');
            out.push_str("| --- |");
            for _ in &report.columns {
                out.push_str(" --- |");
            }
            out.push('\n');
            for c in 0..N_CLASSES {
                out.push_str(&format!("| {} |", CLASS_DISPLAY_NAMES[c]));
                for col in &report.columns {
                    out.push_str(&format!(" {:.1}% |", col.iou_pct[c]));
                }
                out.push('\n');
            }
            out
        }
    }
}

/// Parse a CSV produced by [`emit_report`] back into a report (metadata is
/// not carried by the CSV and comes back default).
pub fn parse_report_csv(text: &str) -> Result<EvalReport> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Data("empty report CSV".into()))?;
    let names: Vec<&str> = header.split(',').skip(1).collect();
    let mut columns: Vec<ReportColumn> = names
        .iter()
        .map(|n| ReportColumn {
            name: n.to_string(),
            iou_pct: [0.0; N_CLASSES],
            vacuous: [false; N_CLASSES],
        })
        .collect();
    for (c, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if c >= N_CLASSES {
            return Err(Error::Data("report CSV has too many rows".into()));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() + 1 {
            return Err(Error::Data(format!("report CSV row {c} has wrong arity")));
        }
        if fields[0] != CLASS_NAMES[c] {
            return Err(Error::Data(format!(
                "report CSV row {c} is {}, expected {}",
                fields[0], CLASS_NAMES[c]
            )));
        }
        for (col, field) in columns.iter_mut().zip(fields[1..].iter()) {
            col.iou_pct[c] = field
                .parse()
                .map_err(|e| Error::Data(format!("bad IOU value {field}: {e}")))?;
        }
    }
    Ok(EvalReport { columns, metadata: ReportMeta::default() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_of(values: &[u8], h: usize, w: usize) -> LabelMask {
        LabelMask::new(h, w, values.to_vec()).unwrap()
    }

    #[test]
    fn identical_masks_have_unit_iou_on_present_classes() {
        let m = mask_of(&[0, 1, 2, 3], 2, 2);
        let v = iou_per_class(&m, &m).unwrap();
        for c in 0..4 {
            assert_eq!(v.iou[c], 1.0);
            assert!(!v.vacuous[c]);
        }
        for c in 4..N_CLASSES {
            assert_eq!(v.iou[c], 1.0);
            assert!(v.vacuous[c]);
        }
    }

    #[test]
    fn disjoint_regions_have_zero_iou() {
        let a = mask_of(&[1, 1, 0, 0], 2, 2);
        let b = mask_of(&[0, 0, 1, 1], 2, 2);
        let v = iou_per_class(&a, &b).unwrap();
        assert_eq!(v.iou[1], 0.0);
    }

    #[test]
    fn partial_overlap_matches_hand_count() {
        // Reference has 4 pixels of class 2; prediction covers 2 of them
        // plus 2 others: IOU = 2 / 6.
        let reference = mask_of(&[2, 2, 2, 2, 0, 0, 0, 0], 2, 4);
        let pred = mask_of(&[2, 2, 0, 0, 2, 2, 0, 0], 2, 4);
        let v = iou_per_class(&pred, &reference).unwrap();
        assert!((v.iou[2] - 2.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn aggregation_strategies_match_hand_arithmetic() {
        // Class 1: (I, U) = (2, 4) and (6, 8).
        let mut c1 = IouCounts::default();
        c1.intersection[1] = 2;
        c1.union[1] = 4;
        let mut c2 = IouCounts::default();
        c2.intersection[1] = 6;
        c2.union[1] = 8;
        let pool = aggregate_iou(&[c1, c2], Aggregate::PoolPixels).unwrap();
        let mean = aggregate_iou(&[c1, c2], Aggregate::MeanOverImages).unwrap();
        assert!((pool.iou[1] - 8.0 / 12.0).abs() < 1e-12);
        assert!((mean.iou[1] - 0.625).abs() < 1e-12);
    }

    #[test]
    fn single_image_aggregation_is_identity_for_both_strategies() {
        let m1 = mask_of(&[0, 1, 1, 2], 2, 2);
        let m2 = mask_of(&[0, 1, 2, 2], 2, 2);
        let c = iou_counts(&m1, &m2).unwrap();
        let direct = iou_per_class(&m1, &m2).unwrap();
        for strategy in [Aggregate::PoolPixels, Aggregate::MeanOverImages] {
            let agg = aggregate_iou(&[c], strategy).unwrap();
            assert_eq!(agg.iou, direct.iou);
        }
    }

    #[test]
    fn empty_aggregation_is_a_data_error() {
        assert!(matches!(
            aggregate_iou(&[], Aggregate::PoolPixels),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn interobserver_duplicated_grader_scores_100() {
        let m = mask_of(&[0, 1, 2, 3, 4, 5, 6, 7, 0], 3, 3);
        let mut graders = BTreeMap::new();
        graders.insert("G1".to_string(), vec![m.clone()]);
        graders.insert("G2".to_string(), vec![m]);
        let report = interobserver_table(&graders, Aggregate::PoolPixels).unwrap();
        assert_eq!(report.columns.len(), 1);
        assert_eq!(report.columns[0].name, "G1 vs G2");
        for c in 0..N_CLASSES {
            assert_eq!(report.columns[0].iou_pct[c], 100.0);
        }
    }

    #[test]
    fn three_graders_make_three_columns() {
        let m = mask_of(&[0, 1, 2, 3], 2, 2);
        let mut graders = BTreeMap::new();
        for g in ["G1", "G2", "G3"] {
            graders.insert(g.to_string(), vec![m.clone()]);
        }
        let report = interobserver_table(&graders, Aggregate::PoolPixels).unwrap();
        let names: Vec<&str> = report.columns.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["G1 vs G2", "G1 vs G3", "G2 vs G3"]);
    }

    #[test]
    fn misaligned_grader_lists_error() {
        let m = mask_of(&[0, 1, 2, 3], 2, 2);
        let mut graders = BTreeMap::new();
        graders.insert("G1".to_string(), vec![m.clone(), m.clone()]);
        graders.insert("G2".to_string(), vec![m]);
        assert!(interobserver_table(&graders, Aggregate::PoolPixels).is_err());
    }

    #[test]
    fn csv_roundtrip_preserves_values() {
        let report = EvalReport {
            columns: vec![ReportColumn {
                name: "model".into(),
                iou_pct: [99.7, 80.4, 87.7, 71.7, 65.7, 87.4, 77.8, 62.8],
                vacuous: [false; N_CLASSES],
            }],
            metadata: ReportMeta::default(),
        };
        let csv = emit_report(&report, ReportFormat::Csv);
        let back = parse_report_csv(&csv).unwrap();
        assert_eq!(back.columns[0].iou_pct, report.columns[0].iou_pct);
    }

    #[test]
    fn empty_column_report_is_header_only() {
        let report = EvalReport { columns: vec![], metadata: ReportMeta::default() };
        let md = emit_report(&report, ReportFormat::Markdown);
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[0], "| Layer |");
        assert_eq!(lines.len(), 2 + N_CLASSES);
    }
}
