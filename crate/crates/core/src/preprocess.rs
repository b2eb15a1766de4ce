//! Preprocessing pipeline: drop the constant Flows column, encode
//! categoricals, scale to [0, 1], time-window sampling, target selection
//! (including the binary class remap) and the 70/30 holdout split.
//!
//! Fitting is a single pass; encoding and scaling of individual rows is
//! pure and safe to run on many rows concurrently after fit.

use chrono::NaiveDateTime;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{CategoricalFeature, Dataset, EncoderState, ScalerState, TargetScheme};
use crate::flow::{BinaryClassLabel, ClassLabel, FeatureVector, RawFlow};
use crate::kv::{bad_value, KvError, KvFile};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("cannot fit on empty input")]
    EmptyInput,
    #[error("need at least 2 rows to split, got {0}")]
    TooFewRows(usize),
    #[error("sample window start is after end")]
    BadWindow,
    #[error("bad pipeline config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Kv(#[from] KvError),
}

/// How train/test rows are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    /// Earliest rows train, latest rows test.
    Chronological,
    /// Seeded permutation before the cut.
    Shuffled { seed: u64 },
}

/// Which rows the encoder and scaler are fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitScope {
    /// Fit on the whole sample before splitting (pipeline default).
    WholeSample,
    /// Fit on training rows only; test rows may fall outside the fitted
    /// range and are clamped by the scaler.
    TrainOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub sample_window: Option<(NaiveDateTime, NaiveDateTime)>,
    pub target_scheme: TargetScheme,
    pub split_ratio: f64,
    pub split_mode: SplitMode,
    pub fit_scope: FitScope,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sample_window: None,
            target_scheme: TargetScheme::AttackType,
            split_ratio: 0.70,
            split_mode: SplitMode::Chronological,
            fit_scope: FitScope::WholeSample,
        }
    }
}

const PIPELINE_KEYS: [&str; 7] = [
    "target_scheme",
    "split_ratio",
    "split_mode",
    "split_seed",
    "fit_scope",
    "window_start",
    "window_end",
];

impl PipelineConfig {
    /// Reads a `key = value` pipeline config. Absent keys keep defaults.
    pub fn from_kv(kv: &KvFile) -> Result<Self, PipelineError> {
        kv.check_keys(&PIPELINE_KEYS)?;
        let mut config = PipelineConfig::default();
        if let Some(raw) = kv.get("target_scheme") {
            config.target_scheme = TargetScheme::parse(raw)
                .ok_or_else(|| bad_value("target_scheme", "expected class_binary or attack_type"))?;
        }
        if let Some(ratio) = kv.parse_value::<f64>("split_ratio")? {
            config.split_ratio = ratio;
        }
        let seed = kv.parse_value::<u64>("split_seed")?.unwrap_or(0);
        match kv.get("split_mode") {
            None | Some("chronological") => {}
            Some("shuffled") => config.split_mode = SplitMode::Shuffled { seed },
            Some(other) => {
                return Err(bad_value("split_mode", format!("unknown mode {other:?}")).into())
            }
        }
        match kv.get("fit_scope") {
            None | Some("whole_sample") => {}
            Some("train_only") => config.fit_scope = FitScope::TrainOnly,
            Some(other) => {
                return Err(bad_value("fit_scope", format!("unknown scope {other:?}")).into())
            }
        }
        let start = kv
            .get("window_start")
            .map(|t| crate::ingest::parse_timestamp(t).map_err(|e| bad_value("window_start", e)))
            .transpose()?;
        let end = kv
            .get("window_end")
            .map(|t| crate::ingest::parse_timestamp(t).map_err(|e| bad_value("window_end", e)))
            .transpose()?;
        config.sample_window = match (start, end) {
            (Some(s), Some(e)) => Some((s, e)),
            (None, None) => None,
            _ => {
                return Err(PipelineError::BadConfig(
                    "window_start and window_end must be given together".to_string(),
                ))
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_text(text: &str) -> Result<Self, PipelineError> {
        Self::from_kv(&KvFile::parse(text)?)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(PipelineError::BadConfig(format!(
                "split_ratio must lie in (0,1), got {}",
                self.split_ratio
            )));
        }
        if let Some((start, end)) = self.sample_window {
            if start >= end {
                return Err(PipelineError::BadConfig(
                    "sample window start must precede end".to_string(),
                ));
            }
        }
        Ok(())
    }
}

/// The ten raw feature values of one flow, in feature-vector order, with the
/// constant Flows column already dropped. Borrowed view; nothing is copied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnencodedRow<'a> {
    pub src_ip: &'a str,
    pub src_port: f64,
    pub dst_ip: &'a str,
    pub dst_port: f64,
    pub proto: &'a str,
    pub flags: &'a str,
    pub tos: f64,
    pub duration: f64,
    pub bytes: f64,
    pub packets: f64,
}

impl<'a> UnencodedRow<'a> {
    pub fn of(flow: &'a RawFlow) -> Self {
        UnencodedRow {
            src_ip: &flow.src_ip,
            src_port: flow.src_port as f64,
            dst_ip: &flow.dst_ip,
            dst_port: flow.dst_port as f64,
            proto: &flow.proto,
            flags: &flow.flags,
            tos: flow.tos as f64,
            duration: flow.duration,
            bytes: flow.bytes as f64,
            packets: flow.packets as f64,
        }
    }
}

/// Drops the Flows column, leaving the ten retained features per flow.
pub fn drop_constant_features(flows: &[RawFlow]) -> Vec<UnencodedRow<'_>> {
    flows.iter().map(UnencodedRow::of).collect()
}

/// Fits first-appearance integer codes for the given categorical features.
/// Deterministic for a fixed input order.
pub fn fit_encoder(
    flows: &[RawFlow],
    categorical_features: &[CategoricalFeature],
) -> Result<EncoderState, PipelineError> {
    if flows.is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    let mut state = EncoderState::default();
    for flow in flows {
        for &feature in categorical_features {
            state.insert(feature, feature.token_of(flow));
        }
    }
    Ok(state)
}

/// Encodes one flow into the unscaled ten-component numeric vector.
/// Categorical components become their fitted codes (unseen tokens map one
/// past the largest code); numeric fields pass through unchanged.
pub fn encode(flow: &RawFlow, encoder: &EncoderState) -> [f64; 10] {
    let row = UnencodedRow::of(flow);
    [
        encoder.code(CategoricalFeature::SrcIp, row.src_ip) as f64,
        row.src_port,
        encoder.code(CategoricalFeature::DstIp, row.dst_ip) as f64,
        row.dst_port,
        encoder.code(CategoricalFeature::Proto, row.proto) as f64,
        encoder.code(CategoricalFeature::Flags, row.flags) as f64,
        row.tos,
        row.duration,
        row.bytes,
        row.packets,
    ]
}

/// Observes per-feature minima and maxima.
pub fn fit_scaler(vectors: &[[f64; 10]]) -> Result<ScalerState, PipelineError> {
    if vectors.is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    let mut min = [f64::INFINITY; 10];
    let mut max = [f64::NEG_INFINITY; 10];
    for vec in vectors {
        for i in 0..10 {
            min[i] = min[i].min(vec[i]);
            max[i] = max[i].max(vec[i]);
        }
    }
    Ok(ScalerState { min, max })
}

/// Min-max transform x' = (x - min)/(max - min). A constant feature maps to
/// 0; values outside the fitted range are clamped to [0, 1].
pub fn scale(vector: &[f64; 10], scaler: &ScalerState) -> FeatureVector {
    let mut out = [0.0f64; 10];
    for i in 0..10 {
        let range = scaler.max[i] - scaler.min[i];
        out[i] = if range == 0.0 {
            0.0
        } else {
            ((vector[i] - scaler.min[i]) / range).clamp(0.0, 1.0)
        };
    }
    FeatureVector(out)
}

/// Stable sort by timestamp; rows with equal timestamps keep input order.
pub fn sort_flows_by_timestamp(flows: &mut [RawFlow]) {
    flows.sort_by_key(|f| f.date_first_seen);
}

/// Selects exactly the flows with start <= date_first_seen <= end from a
/// timestamp-sorted slice, order preserved.
pub fn sample_window(
    flows: &[RawFlow],
    start: NaiveDateTime,
    end: NaiveDateTime,
) -> Result<&[RawFlow], PipelineError> {
    if start > end {
        return Err(PipelineError::BadWindow);
    }
    let lo = flows.partition_point(|f| f.date_first_seen < start);
    let hi = flows.partition_point(|f| f.date_first_seen <= end);
    Ok(&flows[lo..hi])
}

/// Remaps the five-way class label onto {normal, attack}: everything except
/// normal becomes attack.
pub fn map_class_to_binary(label: ClassLabel) -> BinaryClassLabel {
    match label {
        ClassLabel::Normal => BinaryClassLabel::Normal,
        ClassLabel::Attacker
        | ClassLabel::Victim
        | ClassLabel::Suspicious
        | ClassLabel::Unknown => BinaryClassLabel::Attack,
    }
}

/// Row indices for the train and test sides of a holdout split. Train gets
/// exactly floor(ratio * n) rows.
pub fn split_indices(n: usize, ratio: f64, mode: SplitMode) -> (Vec<usize>, Vec<usize>) {
    let train_len = (ratio * n as f64).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    if let SplitMode::Shuffled { seed } = mode {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
    }
    let test = order.split_off(train_len);
    (order, test)
}

/// Splits a timestamp-sorted flow sample into train and test datasets.
///
/// The encoder and scaler are fitted per `config.fit_scope` (whole sample or
/// train rows only, in split order) and attached to both outputs.
pub fn holdout_split(
    flows: &[RawFlow],
    config: &PipelineConfig,
) -> Result<(Dataset, Dataset), PipelineError> {
    config.validate()?;
    let n = flows.len();
    if n < 2 {
        return Err(PipelineError::TooFewRows(n));
    }
    let (train_idx, test_idx) = split_indices(n, config.split_ratio, config.split_mode);

    let fit_flows: Vec<&RawFlow> = match config.fit_scope {
        FitScope::WholeSample => flows.iter().collect(),
        FitScope::TrainOnly => train_idx.iter().map(|&i| &flows[i]).collect(),
    };
    let mut encoder = EncoderState::default();
    if fit_flows.is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    for flow in &fit_flows {
        for feature in CategoricalFeature::ALL {
            encoder.insert(feature, feature.token_of(flow));
        }
    }
    let fit_vectors: Vec<[f64; 10]> = fit_flows.iter().map(|f| encode(f, &encoder)).collect();
    let scaler = fit_scaler(&fit_vectors)?;

    let build = |indices: &[usize]| -> Dataset {
        let rows = indices
            .iter()
            .map(|&i| scale(&encode(&flows[i], &encoder), &scaler))
            .collect();
        let targets = indices
            .iter()
            .map(|&i| config.target_scheme.target_of(&flows[i]))
            .collect();
        Dataset {
            rows,
            targets,
            scheme: config.target_scheme,
            encoder: encoder.clone(),
            scaler: scaler.clone(),
        }
    };
    Ok((build(&train_idx), build(&test_idx)))
}

/// Result of running the whole preprocessing pipeline over raw flows.
pub struct SplitOutput {
    pub train: Dataset,
    pub test: Dataset,
    /// First and last timestamp of the sampled rows, for report metadata.
    pub data_window: Option<(NaiveDateTime, NaiveDateTime)>,
    pub rows_sampled: usize,
}

/// Full pipeline: stable-sort by timestamp, apply the sample window, then
/// encode, scale and split per config.
pub fn build_split(mut flows: Vec<RawFlow>, config: &PipelineConfig) -> Result<SplitOutput, PipelineError> {
    sort_flows_by_timestamp(&mut flows);
    let sampled: &[RawFlow] = match config.sample_window {
        Some((start, end)) => sample_window(&flows, start, end)?,
        None => &flows,
    };
    let data_window = match (sampled.first(), sampled.last()) {
        (Some(first), Some(last)) => Some((first.date_first_seen, last.date_first_seen)),
        _ => None,
    };
    let rows_sampled = sampled.len();
    let (train, test) = holdout_split(sampled, config)?;
    Ok(SplitOutput {
        train,
        test,
        data_window,
        rows_sampled,
    })
}

/// Encodes and scales flows with already-fitted states; used when replaying
/// a stored model's preprocessing over new data.
pub fn apply_states(
    flows: &[RawFlow],
    scheme: TargetScheme,
    encoder: &EncoderState,
    scaler: &ScalerState,
) -> Dataset {
    Dataset {
        rows: flows
            .iter()
            .map(|f| scale(&encode(f, encoder), scaler))
            .collect(),
        targets: flows.iter().map(|f| scheme.target_of(f)).collect(),
        scheme,
        encoder: encoder.clone(),
        scaler: scaler.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_timestamp;
    use proptest::prelude::*;

    fn flow_at(ms: i64, proto: &str, src_port: u32) -> RawFlow {
        RawFlow {
            date_first_seen: parse_timestamp("2017-03-17 00:00:00.000").unwrap()
                + chrono::Duration::milliseconds(ms),
            duration: 0.1,
            proto: proto.to_string(),
            src_ip: format!("10.0.0.{}", src_port % 5),
            src_port,
            dst_ip: "10.0.1.1".to_string(),
            dst_port: 443,
            packets: 1,
            bytes: 100,
            flows: 1,
            flags: "....S.".to_string(),
            tos: 0,
            class_label: ClassLabel::Normal,
            attack_type: crate::flow::AttackTypeLabel::None,
            attack_id: "---".to_string(),
            attack_description: "---".to_string(),
        }
    }

    #[test]
    fn dropped_flows_column_leaves_ten_features() {
        let flows = vec![flow_at(0, "TCP", 100)];
        let rows = drop_constant_features(&flows);
        assert_eq!(rows.len(), 1);
        // the encoded vector has exactly the ten components in order
        let enc = fit_encoder(&flows, &CategoricalFeature::ALL).unwrap();
        let vec = encode(&flows[0], &enc);
        assert_eq!(vec.len(), 10);
        assert_eq!(vec[1], 100.0); // src_port passes through
        assert_eq!(vec[9], 1.0); // packets passes through
    }

    #[test]
    fn drop_constant_features_empty_input() {
        assert!(drop_constant_features(&[]).is_empty());
    }

    #[test]
    fn encoder_first_appearance_and_determinism() {
        let flows = vec![
            flow_at(0, "TCP", 1),
            flow_at(1, "UDP", 2),
            flow_at(2, "TCP", 3),
        ];
        let enc1 = fit_encoder(&flows, &CategoricalFeature::ALL).unwrap();
        let enc2 = fit_encoder(&flows, &CategoricalFeature::ALL).unwrap();
        assert_eq!(enc1, enc2);
        assert_eq!(enc1.code(CategoricalFeature::Proto, "TCP"), 0);
        assert_eq!(enc1.code(CategoricalFeature::Proto, "UDP"), 1);
        assert!(fit_encoder(&[], &CategoricalFeature::ALL).is_err());
    }

    #[test]
    fn unseen_token_gets_next_code() {
        let flows = vec![flow_at(0, "TCP", 1), flow_at(1, "UDP", 2)];
        let enc = fit_encoder(&flows, &CategoricalFeature::ALL).unwrap();
        let mut probe = flow_at(2, "GRE", 3);
        probe.flags = "0xd2".to_string();
        let vec = encode(&probe, &enc);
        assert_eq!(vec[4], 2.0); // two fitted protocols, GRE -> 2
    }

    #[test]
    fn scaler_definition_and_degenerate_range() {
        let vectors: Vec<[f64; 10]> = [0.0, 5.0, 10.0]
            .iter()
            .map(|&v| {
                let mut a = [7.0; 10];
                a[3] = v;
                a
            })
            .collect();
        let scaler = fit_scaler(&vectors).unwrap();
        let scaled: Vec<f64> = vectors.iter().map(|v| scale(v, &scaler).0[3]).collect();
        assert_eq!(scaled, vec![0.0, 0.5, 1.0]);
        // constant feature maps to zero
        assert_eq!(scale(&vectors[0], &scaler).0[0], 0.0);
        assert!(fit_scaler(&[]).is_err());
    }

    #[test]
    fn scale_clamps_out_of_range_values() {
        let scaler = ScalerState {
            min: [0.0; 10],
            max: [10.0; 10],
        };
        let scaled = scale(&[12.0; 10], &scaler);
        assert!(scaled.0.iter().all(|&x| x == 1.0));
        let scaled = scale(&[-3.0; 10], &scaler);
        assert!(scaled.0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sample_window_bounds_inclusive() {
        let flows: Vec<RawFlow> = (0..10).map(|i| flow_at(i * 1000, "TCP", i as u32)).collect();
        let start = parse_timestamp("2017-03-17 00:00:02.000").unwrap();
        let end = parse_timestamp("2017-03-17 00:00:05.000").unwrap();
        let window = sample_window(&flows, start, end).unwrap();
        assert_eq!(window.len(), 4); // seconds 2,3,4,5 inclusive
        assert_eq!(window[0].src_port, 2);
        assert_eq!(window[3].src_port, 5);

        let all = sample_window(&flows, flows[0].date_first_seen, flows[9].date_first_seen).unwrap();
        assert_eq!(all.len(), 10);

        let late = parse_timestamp("2018-01-01 00:00:00.000").unwrap();
        assert!(sample_window(&flows, late, late).unwrap().is_empty());
        assert!(sample_window(&flows, end, start).is_err());
    }

    #[test]
    fn binary_remap_covers_every_class() {
        use BinaryClassLabel::*;
        assert_eq!(map_class_to_binary(ClassLabel::Normal), Normal);
        assert_eq!(map_class_to_binary(ClassLabel::Suspicious), Attack);
        assert_eq!(map_class_to_binary(ClassLabel::Unknown), Attack);
        assert_eq!(map_class_to_binary(ClassLabel::Victim), Attack);
        assert_eq!(map_class_to_binary(ClassLabel::Attacker), Attack);
    }

    #[test]
    fn chronological_split_takes_earliest_rows() {
        let flows: Vec<RawFlow> = (0..10).map(|i| flow_at(i * 1000, "TCP", i as u32)).collect();
        let config = PipelineConfig::default();
        let (train, test) = holdout_split(&flows, &config).unwrap();
        assert_eq!(train.len(), 7);
        assert_eq!(test.len(), 3);
        // train rows are the earliest seven: src_port 0..7 scaled by max 9
        assert_eq!(train.rows[6].0[1], 6.0 / 9.0);
        assert_eq!(test.rows[0].0[1], 7.0 / 9.0);
    }

    #[test]
    fn shuffled_split_is_deterministic() {
        let flows: Vec<RawFlow> = (0..50).map(|i| flow_at(i * 10, "TCP", i as u32)).collect();
        let config = PipelineConfig {
            split_mode: SplitMode::Shuffled { seed: 7 },
            ..PipelineConfig::default()
        };
        let (train_a, test_a) = holdout_split(&flows, &config).unwrap();
        let (train_b, test_b) = holdout_split(&flows, &config).unwrap();
        assert_eq!(train_a, train_b);
        assert_eq!(test_a, test_b);
    }

    #[test]
    fn single_row_split_errors() {
        let flows = vec![flow_at(0, "TCP", 1)];
        assert!(matches!(
            holdout_split(&flows, &PipelineConfig::default()),
            Err(PipelineError::TooFewRows(1))
        ));
    }

    #[test]
    fn config_text_round_trip() {
        let text = "\
            target_scheme = class_binary\n\
            split_ratio = 0.6\n\
            split_mode = shuffled\n\
            split_seed = 99\n\
            fit_scope = train_only\n\
            window_start = 2017-03-17 14:18:05.000\n\
            window_end = 2017-03-20 17:42:17.000\n";
        let config = PipelineConfig::from_text(text).unwrap();
        assert_eq!(config.target_scheme, TargetScheme::ClassBinary);
        assert_eq!(config.split_ratio, 0.6);
        assert_eq!(config.split_mode, SplitMode::Shuffled { seed: 99 });
        assert_eq!(config.fit_scope, FitScope::TrainOnly);
        assert!(config.sample_window.is_some());

        assert!(PipelineConfig::from_text("split_ratio = 1.5\n").is_err());
        assert!(PipelineConfig::from_text("bogus = 1\n").is_err());
        assert!(PipelineConfig::from_text("window_start = 2017-03-17 14:18:05.000\n").is_err());
    }

    proptest! {
        // |train| + |test| = n with train exactly floor(ratio * n), and no
        // row duplicated or dropped
        #[test]
        fn split_sizes_exact(n in 2usize..300, ratio in 0.05f64..0.95, seed in 0u64..50, shuffled: bool) {
            let mode = if shuffled { SplitMode::Shuffled { seed } } else { SplitMode::Chronological };
            let (train, test) = split_indices(n, ratio, mode);
            prop_assert_eq!(train.len(), (ratio * n as f64).floor() as usize);
            prop_assert_eq!(train.len() + test.len(), n);
            let mut seen = vec![false; n];
            for &i in train.iter().chain(test.iter()) {
                prop_assert!(!seen[i]);
                seen[i] = true;
            }
            prop_assert!(seen.into_iter().all(|s| s));
        }

        // every training component lies in [0,1]; with clamping, every test
        // component too, even when fitting on train rows only
        #[test]
        fn scaled_components_bounded(ports in prop::collection::vec(0u32..=65535, 4..120), train_only: bool) {
            let flows: Vec<RawFlow> = ports
                .iter()
                .enumerate()
                .map(|(i, &p)| flow_at(i as i64 * 100, if p % 2 == 0 { "TCP" } else { "UDP" }, p))
                .collect();
            let config = PipelineConfig {
                fit_scope: if train_only { FitScope::TrainOnly } else { FitScope::WholeSample },
                ..PipelineConfig::default()
            };
            let (train, test) = holdout_split(&flows, &config).unwrap();
            for row in train.rows.iter().chain(test.rows.iter()) {
                for &x in row.as_slice() {
                    prop_assert!((0.0..=1.0).contains(&x));
                }
            }
        }
    }
}
