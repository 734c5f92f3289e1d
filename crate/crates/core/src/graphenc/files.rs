use std::collections::BTreeMap;

use super::GraphEncError;
use crate::failure::{Criticality, CriticalityLabel, ImpactRecord, Prediction};

const PREDICTION_HEADER: [&str; 3] = ["scenario_id", "impact_pred", "critical_prob"];

fn type_code(c: Criticality) -> u8 {
    match c {
        Criticality::Worst => 1,
        Criticality::Significant => 2,
        Criticality::Normal => 3,
    }
}

/// Training labels: `scenario_id,impact,ratio,label,type` where `type` is 1
/// for Worst, 2 for Significant and 3 for Normal.
pub fn format_label_csv(records: &[ImpactRecord], labels: &[CriticalityLabel]) -> String {
    assert_eq!(records.len(), labels.len(), "one label per record");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario_id", "impact", "ratio", "label", "type"])
        .expect("in-memory write");
    for (r, l) in records.iter().zip(labels) {
        w.write_record([
            r.scenario_id.to_string(),
            r.impact.to_string(),
            l.ratio.to_string(),
            l.class.to_string(),
            type_code(l.class).to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
}

pub fn format_predictions_csv(predictions: &[Prediction]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PREDICTION_HEADER).expect("in-memory write");
    for p in predictions {
        w.write_record([
            p.scenario_id.to_string(),
            p.impact_pred.to_string(),
            p.critical_prob.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
}

/// Predictions keyed by scenario id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredictionTable {
    by_id: BTreeMap<usize, Prediction>,
}

impl PredictionTable {
    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn get(&self, scenario_id: usize) -> Result<&Prediction, GraphEncError> {
        self.by_id
            .get(&scenario_id)
            .ok_or(GraphEncError::MissingPrediction(scenario_id))
    }

    /// Predictions for `ids` in the given order; the first missing id is an
    /// error.
    pub fn select(&self, ids: impl IntoIterator<Item = usize>) -> Result<Vec<Prediction>, GraphEncError> {
        ids.into_iter().map(|id| self.get(id).copied()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Prediction> {
        self.by_id.values()
    }
}

/// Parses `scenario_id,impact_pred,critical_prob` rows. The header line is
/// optional; `impact_pred` must be finite and non-negative and
/// `critical_prob` must lie in `[0, 1]`.
pub fn parse_predictions_csv(text: &str) -> Result<PredictionTable, GraphEncError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut by_id = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let err = |message: String| GraphEncError::Parse { line, message };
        let rec = rec.map_err(|e| err(e.to_string()))?;
        if i == 0 && rec.iter().eq(PREDICTION_HEADER) {
            continue;
        }
        if rec.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", rec.len())));
        }
        let scenario_id: usize = rec[0]
            .parse()
            .map_err(|_| err(format!("invalid scenario id `{}`", &rec[0])))?;
        let impact_pred: f64 = rec[1]
            .parse()
            .map_err(|_| err(format!("invalid impact_pred `{}`", &rec[1])))?;
        let critical_prob: f64 = rec[2]
            .parse()
            .map_err(|_| err(format!("invalid critical_prob `{}`", &rec[2])))?;
        if !(impact_pred.is_finite() && impact_pred >= 0.0) {
            return Err(err(format!("impact_pred {impact_pred} must be finite and >= 0")));
        }
        if !(0.0..=1.0).contains(&critical_prob) {
            return Err(err(format!("critical_prob {critical_prob} outside [0, 1]")));
        }
        let p = Prediction {
            scenario_id,
            impact_pred,
            critical_prob,
        };
        if by_id.insert(scenario_id, p).is_some() {
            return Err(GraphEncError::DuplicatePrediction(scenario_id));
        }
    }
    Ok(PredictionTable { by_id })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::failure::{classify, ImpactSource};

    #[test]
    fn prediction_row_parses() {
        let t = parse_predictions_csv("7,1.83,0.99\n").unwrap();
        assert_eq!(
            *t.get(7).unwrap(),
            Prediction {
                scenario_id: 7,
                impact_pred: 1.83,
                critical_prob: 0.99
            }
        );
    }

    #[test]
    fn missing_id_is_named() {
        let t = parse_predictions_csv("scenario_id,impact_pred,critical_prob\n0,1.0,0.1\n").unwrap();
        let err = t.select([0, 4]).unwrap_err();
        assert!(matches!(err, GraphEncError::MissingPrediction(4)));
        assert!(err.to_string().contains('4'));
    }

    #[test]
    fn schema_violations() {
        assert!(matches!(
            parse_predictions_csv("1,1.0,0.5\n1,2.0,0.5\n"),
            Err(GraphEncError::DuplicatePrediction(1))
        ));
        assert!(matches!(
            parse_predictions_csv("1,1.0,1.5\n"),
            Err(GraphEncError::Parse { line: 1, .. })
        ));
        assert!(parse_predictions_csv("1,-1.0,0.5\n").is_err());
        assert!(parse_predictions_csv("1,1.0\n").is_err());
        assert!(parse_predictions_csv("x,1.0,0.5\n").is_err());
    }

    #[test]
    fn predictions_round_trip() {
        let ps = vec![
            Prediction { scenario_id: 2, impact_pred: 1.25, critical_prob: 0.75 },
            Prediction { scenario_id: 0, impact_pred: 0.0, critical_prob: 0.0 },
        ];
        let t = parse_predictions_csv(&format_predictions_csv(&ps)).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.select([2, 0]).unwrap(), ps);
    }

    #[test]
    fn label_csv_types() {
        let records: Vec<_> = [2.0, 1.7, 1.0]
            .iter()
            .enumerate()
            .map(|(i, &x)| ImpactRecord::new(i, 1.0, x, ImpactSource::OracleMcf).unwrap())
            .collect();
        let text = format_label_csv(&records, &classify(&records).unwrap());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "scenario_id,impact,ratio,label,type");
        assert_eq!(lines[1], "0,2,1,Worst,1");
        assert_eq!(lines[2], "1,1.7,0.85,Significant,2");
        assert_eq!(lines[3], "2,1,0.5,Normal,3");
    }
}
