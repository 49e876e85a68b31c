//! One positive and one near-miss script per trigger rule.

use serde_json::json;
use workbench_core::extract::pagegen::SiteStyle;
use workbench_core::guidance::{EventKind, RuleId};
use workbench_core::ValueType;

use super::{num, text, Script};

const URL: &str = "https://shop.example/cameras";

fn webpage(positive: bool) -> Script {
    let mut s = Script::new();
    s.page(1, 12, SiteStyle::Generic, URL);
    let title = if positive { "Best Cameras Under $2000" } else { "   " };
    s.event(EventKind::WorkspaceCreated { title: title.into() });
    s
}

fn element_selection(positive: bool) -> Script {
    let mut s = Script::new();
    let snap = s.page(2, 12, SiteStyle::Generic, URL);
    let titles = s.select(&snap, "li.product-card:not(.sponsored) h2.title");
    let prices = s.select(&snap, "li.product-card:not(.sponsored) span.price");
    let second = if positive { titles[1] } else { prices[0] };
    for node in [titles[0], second] {
        s.event(EventKind::SelectionMade { instance_id: None, rows: vec![], snapshot_id: Some(snap.snapshot_id.clone()), node_id: Some(node) });
    }
    s
}

fn schema_inference(positive: bool) -> Script {
    let mut s = Script::new();
    let snap = s.page(3, 12, SiteStyle::Generic, URL);
    let titles = s.select(&snap, "li.product-card:not(.sponsored) h2.title");
    let name = if positive { "Column 1" } else { "Title" };
    s.call(
        "extractBatch",
        json!({"pageUrl": URL, "pattern": {"exemplars": [titles[0], titles[1]]}, "fields": [{"name": name, "css": "h2"}], "newInstanceName": "Items"}),
    );
    s.event(EventKind::TableCreated { instance_id: "Items".into() });
    s
}

fn batch_extraction(positive: bool) -> Script {
    let mut s = Script::new();
    let snap = s.page(4, 12, SiteStyle::Generic, URL);
    s.table("T", &[("Column 1", ValueType::Text)], vec![]);
    let titles = s.select(&snap, "li.product-card:not(.sponsored) h2.title");
    let prices = s.select(&snap, "li.product-card:not(.sponsored) span.price");
    s.capture("T", 0, "Column 1", &snap, titles[0]);
    let second = if positive { titles[1] } else { prices[1] };
    s.capture("T", 1, "Column 1", &snap, second);
    s
}

fn people(s: &mut Script) {
    let rows = [("Ada", "Lovelace"), ("Alan", "Turing"), ("Grace", "Hopper"), ("Edsger", "Dijkstra"), ("Barbara", "Liskov"), ("Donald", "Knuth")];
    s.table(
        "People",
        &[("First", ValueType::Text), ("Last", ValueType::Text)],
        rows.iter().map(|(f, l)| vec![text(f), text(l)]).collect(),
    );
    s.call("updateInstance", json!({"instanceId": "People", "addColumns": [{"name": "Full Name", "type": "text"}]}));
}

fn autocomplete(positive: bool) -> Script {
    let mut s = Script::new();
    people(&mut s);
    s.edit("People", 0, "Full Name", Some("Ada Lovelace"));
    if positive {
        s.edit("People", 1, "Full Name", Some("Alan Turing"));
    }
    s
}

fn computed(positive: bool) -> Script {
    let mut s = Script::new();
    let second = if positive { "Quantity" } else { "Rating" };
    s.table(
        "Orders",
        &[("Item", ValueType::Text), ("Price", ValueType::Number), (second, ValueType::Number)],
        vec![vec![text("Lens cap"), num(9.5), num(3.0)], vec![text("Strap"), num(24.0), num(1.0)], vec![text("Card"), num(18.0), num(2.0)]],
    );
    s
}

fn two_catalogs(s: &mut Script) {
    let cols = [("Model", ValueType::Text), ("Price", ValueType::Number)];
    s.table("PageOne", &cols, vec![vec![text("Alpha 1"), num(1200.0)], vec![text("Alpha 2"), num(900.0)], vec![text("Alpha 3"), num(1500.0)]]);
    s.table("PageTwo", &cols, vec![vec![text("Beta 1"), num(700.0)], vec![text("Beta 2"), num(1100.0)], vec![text("Beta 3"), num(650.0)]]);
}

fn sorting_rule(positive: bool) -> Script {
    let mut s = Script::new();
    two_catalogs(&mut s);
    s.call("tableSort", json!({"instanceId": "PageOne", "columnName": "Price", "order": "asc"}));
    s.event(EventKind::SortApplied { instance_id: "PageOne".into(), column: "Price".into(), order: workbench_core::transform::sort::SortOrder::Asc });
    let order = if positive { "asc" } else { "desc" };
    s.call("tableSort", json!({"instanceId": "PageTwo", "columnName": "Price", "order": order}));
    let order = serde_json::from_value(json!(order)).unwrap();
    s.event(EventKind::SortApplied { instance_id: "PageTwo".into(), column: "Price".into(), order });
    s
}

fn joining(positive: bool) -> Script {
    let mut s = Script::new();
    s.table(
        "Products",
        &[("Product_ID", ValueType::Text), ("Name", ValueType::Text)],
        vec![vec![text("P1"), text("Alpha 7")], vec![text("P2"), text("EOS R6")], vec![text("P3"), text("Z6 II")]],
    );
    let ids = if positive { ["P1", "P3", "P9"] } else { ["Q1", "Q3", "Q9"] };
    s.table(
        "Reviews",
        &[("Product_ID", ValueType::Text), ("Stars", ValueType::Number)],
        ids.iter().zip([4.5, 4.0, 3.5]).map(|(i, n)| vec![text(i), num(n)]).collect(),
    );
    s
}

fn entity_resolution(positive: bool) -> Script {
    let mut s = Script::new();
    s.table(
        "Listings",
        &[("Item", ValueType::Text), ("Currency", ValueType::Text)],
        ["$", "USD", "USD", "usd", "$", "USD"].iter().enumerate().map(|(i, c)| vec![text(&format!("item {i}")), text(c)]).collect(),
    );
    s.edit("Listings", 1, "Currency", Some("$"));
    if positive {
        s.edit("Listings", 2, "Currency", Some("$"));
    }
    s
}

fn extraneous(positive: bool) -> Script {
    let mut s = Script::new();
    s.table(
        "Titles",
        &[("Title", ValueType::Text)],
        ["Sponsored Canon R5", "Sponsored Nikon Z6", "Sponsored Sony A7", "Fuji X-T5", "Sponsored Leica Q"].iter().map(|t| vec![text(t)]).collect(),
    );
    s.edit("Titles", 0, "Title", Some("Canon R5"));
    let second = if positive { "Nikon Z6" } else { "Sponsored Nikon" };
    s.edit("Titles", 1, "Title", Some(second));
    s
}

fn fill_missing(positive: bool) -> Script {
    let mut s = Script::new();
    let weights: Vec<Option<f64>> =
        if positive { vec![Some(650.0), None, Some(720.0), None, None] } else { vec![Some(650.0), None, Some(720.0), Some(500.0), Some(610.0)] };
    s.table(
        "Bodies",
        &[("Model", ValueType::Text), ("Weight", ValueType::Number)],
        weights
            .iter()
            .enumerate()
            .map(|(i, w)| vec![text(&format!("Body {i}")), w.map_or(workbench_core::CellValue::Missing, num)])
            .collect(),
    );
    s
}

fn type_correction(positive: bool) -> Script {
    let mut s = Script::new();
    s.table(
        "Specs",
        &[("Model", ValueType::Text), ("Megapixels", ValueType::Text)],
        ["24.2", "45", "N/A", "33", "unknown", "61", "N/A"].iter().enumerate().map(|(i, v)| vec![text(&format!("M{i}")), text(v)]).collect(),
    );
    let row = if positive { 2 } else { 1 };
    s.edit("Specs", row, "Megapixels", None);
    s
}

fn sales(s: &mut Script) {
    s.table(
        "Sales",
        &[("Region", ValueType::Text), ("Revenue", ValueType::Number)],
        vec![
            vec![text("North"), num(100.0)],
            vec![text("South"), num(200.0)],
            vec![text("North"), num(150.0)],
            vec![text("East"), num(120.0)],
        ],
    );
}

fn auto_viz(positive: bool) -> Script {
    let mut s = Script::new();
    if positive {
        sales(&mut s);
    } else {
        s.table(
            "Sales",
            &[("Region", ValueType::Text), ("Rep", ValueType::Text)],
            vec![vec![text("North"), text("Kim")], vec![text("South"), text("Lee")], vec![text("North"), text("Ann")]],
        );
    }
    s.event(EventKind::SelectionMade { instance_id: Some("Sales".into()), rows: vec![], snapshot_id: None, node_id: None });
    s
}

fn alternative_chart(positive: bool) -> Script {
    let mut s = Script::new();
    sales(&mut s);
    let chart = if positive { "line" } else { "bar" };
    s.call("createVisualization", json!({"sourceInstanceId": "Sales", "chartType": chart, "xAxis": "Region", "yAxis": "Revenue"}));
    s.event(EventKind::VizCreated { instance_id: "Chart1".into() });
    s
}

fn interactive_filter(positive: bool) -> Script {
    let mut s = Script::new();
    sales(&mut s);
    s.call("createVisualization", json!({"sourceInstanceId": "Sales", "chartType": "bar", "xAxis": "Region", "yAxis": "Revenue"}));
    s.event(EventKind::VizCreated { instance_id: "Chart1".into() });
    let rows = if positive { vec![0, 2] } else { vec![0, 1] };
    s.event(EventKind::SelectionMade { instance_id: Some("Sales".into()), rows, snapshot_id: None, node_id: None });
    s
}

/// `(rule, builder)`; the builder takes `true` for the positive script.
pub fn trigger_scripts() -> Vec<(RuleId, fn(bool) -> Script)> {
    vec![
        (RuleId::WebpageSuggestion, webpage),
        (RuleId::ElementSelection, element_selection),
        (RuleId::SchemaInference, schema_inference),
        (RuleId::BatchExtraction, batch_extraction),
        (RuleId::Autocomplete, autocomplete),
        (RuleId::ComputedColumns, computed),
        (RuleId::SortingFilteringRule, sorting_rule),
        (RuleId::JoiningTables, joining),
        (RuleId::EntityResolution, entity_resolution),
        (RuleId::RemoveExtraneous, extraneous),
        (RuleId::FillMissing, fill_missing),
        (RuleId::TypeCorrection, type_correction),
        (RuleId::AutoViz, auto_viz),
        (RuleId::AlternativeChart, alternative_chart),
        (RuleId::InteractiveFilter, interactive_filter),
    ]
}
