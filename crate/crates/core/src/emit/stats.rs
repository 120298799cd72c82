use crate::rewriter::Metrics;

/// Human-readable, aligned metric table.
pub fn report(m: &Metrics) -> String {
    let ms = |d: std::time::Duration| format!("{:.3} ms", d.as_secs_f64() * 1000.0);
    let rows = [
        ("size", m.size.to_string()),
        ("atoms", m.atoms.to_string()),
        ("joins", m.joins.to_string()),
        ("explored", m.explored.to_string()),
        ("generated", m.generated.to_string()),
        ("factorizations", m.factorizations.to_string()),
        ("pruned", m.pruned.to_string()),
        ("components", m.components.to_string()),
        ("rewrite time", ms(m.rewrite_time)),
        ("split time", ms(m.split_time)),
        ("unfold time", ms(m.unfold_time)),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v:>12}\n")).collect()
}

/// `key=value` lines, one per metric.
pub fn report_kv(m: &Metrics) -> String {
    format!("{m}\n")
}
