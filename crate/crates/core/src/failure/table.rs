//! Impact table: `scenario_id,links,mlu_base,mlu_failed,impact,label,source`,
//! with the failed links of a scenario joined by `;`.

use super::{
    CriticalityLabel, Criticality, FailureError, FailureScenario, ImpactRecord, ImpactSource,
};

/// One parsed row of an impact table.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpactRow {
    pub scenario: FailureScenario,
    pub record: ImpactRecord,
    pub label: Criticality,
}

fn join_links(links: &[usize]) -> String {
    links
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Renders records with their labels. `scenarios` must contain every
/// referenced scenario id.
pub fn format_impact_csv(
    scenarios: &[FailureScenario],
    records: &[ImpactRecord],
    labels: &[CriticalityLabel],
) -> Result<String, FailureError> {
    assert_eq!(records.len(), labels.len(), "one label per record");
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| FailureError::Table(e.to_string());
    w.write_record(["scenario_id", "links", "mlu_base", "mlu_failed", "impact", "label", "source"])
        .map_err(io)?;
    for (r, l) in records.iter().zip(labels) {
        let s = scenarios
            .iter()
            .find(|s| s.id == r.scenario_id)
            .ok_or_else(|| FailureError::Table(format!("unknown scenario id {}", r.scenario_id)))?;
        w.write_record([
            r.scenario_id.to_string(),
            join_links(&s.links),
            r.mlu_base.to_string(),
            r.mlu_failed.to_string(),
            r.impact.to_string(),
            l.class.to_string(),
            r.source.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| FailureError::Table(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn parse_impact_csv(text: &str) -> Result<Vec<ImpactRow>, FailureError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| FailureError::Table(e.to_string()))?
        .clone();
    let expected = ["scenario_id", "links", "mlu_base", "mlu_failed", "impact", "label", "source"];
    if headers.iter().ne(expected) {
        return Err(FailureError::Table(format!(
            "expected header {}, got {}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| FailureError::Table(format!("line {line}: {e}")))?;
        let bad = |what: &str| FailureError::Table(format!("line {line}: invalid {what}"));
        let num = |k: usize, what: &str| rec[k].parse::<f64>().map_err(|_| bad(what));
        let id: usize = rec[0].parse().map_err(|_| bad("scenario_id"))?;
        let links = rec[1]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad("links"))?;
        let source: ImpactSource = rec[6].parse().map_err(|_| bad("source"))?;
        let record = ImpactRecord {
            scenario_id: id,
            mlu_base: num(2, "mlu_base")?,
            mlu_failed: num(3, "mlu_failed")?,
            impact: num(4, "impact")?,
            source,
        };
        out.push(ImpactRow {
            scenario: FailureScenario::new(id, links),
            record,
            label: rec[5].parse().map_err(|_| bad("label"))?,
        });
    }
    Ok(out)
}
