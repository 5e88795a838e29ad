use super::{MetricReport, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    TextTable,
    Structured,
}

const HEADER: &str = "Metric                                      Status  Expected";

pub fn render_report(report: &MetricReport, format: Format) -> String {
    match format {
        Format::Structured => serde_json::to_string_pretty(report).expect("report serializes"),
        Format::TextTable => text_table(report),
    }
}

fn text_table(report: &MetricReport) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    if report.results.is_empty() {
        return out;
    }
    for source in Source::ALL {
        let rows: Vec<_> = report.results.iter().filter(|r| r.source == source).collect();
        if rows.is_empty() {
            continue;
        }
        out.push_str(&format!("\n{}\n", source.title()));
        for r in rows {
            let flag = if r.matches() { "" } else { "  (mismatch)" };
            out.push_str(&format!(
                "  {:<42}{:<8}{}{}\n",
                r.name,
                r.status.as_str(),
                r.expected.as_str(),
                flag
            ));
        }
    }
    out.push('\n');
    let summary: Vec<String> = report.summary.iter().map(|(s, n)| format!("{s}: {n}")).collect();
    out.push_str(&format!("Summary: {}\n", summary.join(", ")));
    out.push_str(&report.note);
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checklist::{evaluate, Registry};
    use crate::fram::{shipped_improved, shipped_initial};

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(
            render_report(&MetricReport::empty(), Format::TextTable),
            format!("{HEADER}\n")
        );
    }

    #[test]
    fn table_groups_by_source() {
        let r = evaluate(&shipped_initial(), &shipped_improved(), &[], &Registry::builtin()).unwrap();
        let text = render_report(&r, Format::TextTable);
        let a = text.find(Source::GuidelinesHai.title()).unwrap();
        let b = text.find(Source::SharedControl.title()).unwrap();
        let c = text.find(Source::HrcMl.title()).unwrap();
        assert!(a < b && b < c);
        assert!(text.contains("Proof of concept"));
    }

    #[test]
    fn structured_round_trips() {
        let r = evaluate(&shipped_initial(), &shipped_improved(), &[], &Registry::builtin()).unwrap();
        let text = render_report(&r, Format::Structured);
        assert_eq!(serde_json::from_str::<MetricReport>(&text).unwrap(), r);
    }
}
