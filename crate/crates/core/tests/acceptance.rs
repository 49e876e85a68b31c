//! Headless acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scraper::{Html, Selector};
use serde_json::{json, Value};

use common::fill_corpus::corpus;
use common::fill_oracle::smallest_size_up_to_3;
use common::scripts::trigger_scripts;
use common::{num, text, Script};
use workbench_core::eval::summary::{LabelRecord, Summary};
use workbench_core::eval::benchmark::{AMAZON_CAMERAS, EBAY_CAMERAS};
use workbench_core::eval::task::{load_task, BenchmarkManifest};
use workbench_core::eval::{
    bundled_tasks, camera_scenario, classify, merge_timeline, replay_task, summarize_runs, write_benchmark, Block, Category, Criteria,
    Difficulty, GuidanceType, Label, ReplayOptions, Replayed, RunReport, TimelineEvent, DEFAULT_GAP_MS,
};
use workbench_core::extract::pagegen::{generate_list_page, SiteStyle};
use workbench_core::extract::{css_select, generalize_selection, ElementSelection};
use workbench_core::guidance::{
    EventKind, GuidanceConfig, GuidanceEngine, InteractionEvent, MacroPlanner, MacroRequest, TemplatesOnly, View,
};
use workbench_core::llm::{build_context, ContextOptions, Gateway, LlmConfig, LlmError, PlanProvider, PlanRequest, ProviderKind};
use workbench_core::pattern::infer_fill_program;
use workbench_core::transform::merge::{merge_instances, MergeOptions, MergeStrategy};
use workbench_core::transform::ExecEnv;
use workbench_core::viz::Channel;
use workbench_core::{CellValue, ChartType, Column, TableInstance, ToolCall, ValueType, Workspace};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// 1. Triggers

fn trigger_conformance() -> Outcome {
    let started = Instant::now();
    let scripts = trigger_scripts();
    ensure!(scripts.len() == 15, "expected 15 rules, have {}", scripts.len());
    let mut passed = 0;
    let mut failures = Vec::new();
    for (rule, build) in &scripts {
        let fired = build(true).fired();
        if fired.len() == 1 && fired.contains(rule) {
            passed += 1;
        } else {
            failures.push(format!("{rule} positive fired {fired:?}"));
        }
        let fired = build(false).fired();
        if fired.is_empty() {
            passed += 1;
        } else {
            failures.push(format!("{rule} negative fired {fired:?}"));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure!(failures.is_empty(), "{passed}/30: {failures:?}");
    ensure!(secs < 5.0, "30/30 but took {secs:.2} s");
    Ok(format!("30/30 scripts in {secs:.3} s"))
}

// 2. Batch extraction

fn title_nodes(snap_html: &str, style: SiteStyle) -> Vec<usize> {
    let card = match style {
        SiteStyle::Generic => "li.product-card:not(.sponsored)",
        SiteStyle::AmazonLike => "div.s-result-item:not(.AdHolder)",
        SiteStyle::EbayLike => "li.s-item:not(.s-item--promoted)",
    };
    css_select(snap_html, &format!("{card} h2"), None).unwrap()
}

fn batch_extraction() -> Outcome {
    let counts = [10, 13, 17, 20, 24, 27, 31, 34, 38, 40];
    let styles = [SiteStyle::Generic, SiteStyle::AmazonLike, SiteStyle::EbayLike];
    let mut report = Vec::new();
    for (i, &n) in counts.iter().enumerate() {
        let style = styles[i % 3];
        let url = format!("https://shop{i}.example/cameras");
        let page = generate_list_page(7000 + i as u64, n, style, &url, i % 2 == 1);
        let mut s = Script::new();
        let snap = s.page_from_html(&page.html, &url);
        let titles = title_nodes(&snap.html, style);
        let exemplars = [ElementSelection::new(&snap, titles[0]).unwrap(), ElementSelection::new(&snap, titles[1]).unwrap()];
        let sel = generalize_selection(&snap, &exemplars).map_err(|e| format!("page {i}: {e}"))?;
        ensure!(sel.match_count == n, "page {i} (n={n}): selector matches {}", sel.match_count);

        s.call(
            "extractBatch",
            json!({"pageUrl": url, "pattern": {"exemplars": [titles[0], titles[1]]}, "fields": [{"name": "Title", "css": "h2"}], "newInstanceName": "Items"}),
        );
        let t = s.ws.state().table("Items").unwrap();
        let col = t.column_index("Title").unwrap();
        let got: Vec<String> = (0..t.row_count()).map(|r| t.value(r, col).display_string().unwrap_or_default()).collect();
        let known: BTreeSet<&str> = page.records.iter().map(|r| r.title.as_str()).collect();
        let spurious = got.iter().filter(|g| !known.contains(g.as_str())).count();
        ensure!(t.row_count() == n, "page {i} (n={n}): table has {} rows", t.row_count());
        ensure!(spurious == 0, "page {i}: {spurious} spurious rows");
        let want: Vec<&str> = page.records.iter().map(|r| r.title.as_str()).collect();
        ensure!(got == want, "page {i}: rows differ from the generated records");
        report.push(n.to_string());
    }
    Ok(format!("10/10 pages exact, n = {}", report.join(",")))
}

// 3. Joins

const NAMES: [&str; 8] = ["k", "a", "b", "c", "d", "e", "f", "g"];

fn random_value(rng: &mut ChaCha8Rng, ty: ValueType, domain: u32, missing: f64) -> CellValue {
    if rng.gen_bool(missing) {
        return CellValue::Missing;
    }
    let v = rng.gen_range(0..domain);
    match ty {
        ValueType::Number => CellValue::number(v as f64),
        _ => CellValue::text(format!("v{v}")),
    }
}

fn random_table(rng: &mut ChaCha8Rng, id: &str, types: &BTreeMap<&str, ValueType>) -> TableInstance {
    let mut others: Vec<&str> = NAMES[1..].to_vec();
    others.shuffle(rng);
    others.truncate(rng.gen_range(0..=7));
    let mut names = others;
    names.insert(rng.gen_range(0..=names.len()), "k");
    let rows = rng.gen_range(0..=50);
    let cols: Vec<Column> = names.iter().map(|n| Column::new(*n, types[n])).collect();
    let values = (0..rows)
        .map(|_| names.iter().map(|n| if *n == "k" { random_value(rng, types[n], 6, 0.1) } else { random_value(rng, types[n], 100, 0.2) }).collect())
        .collect();
    TableInstance::from_values(id, id, cols, values).unwrap()
}

fn row_key(row: &[CellValue]) -> String {
    serde_json::to_string(row).unwrap()
}

fn multiset(rows: &[Vec<CellValue>]) -> Vec<String> {
    let mut v: Vec<String> = rows.iter().map(|r| row_key(r)).collect();
    v.sort();
    v
}

/// Nested-loop joins and a name-aligned union.
fn oracle_merge(l: &TableInstance, r: &TableInstance, strategy: MergeStrategy) -> (usize, Vec<Vec<CellValue>>) {
    let (lv, rv) = (l.values(), r.values());
    if strategy == MergeStrategy::Union {
        let mut names: Vec<&str> = l.columns.iter().map(|c| c.name.as_str()).collect();
        for c in &r.columns {
            if !names.contains(&c.name.as_str()) {
                names.push(&c.name);
            }
        }
        let mut out = Vec::new();
        for (t, vals) in [(l, &lv), (r, &rv)] {
            for row in vals {
                out.push(names.iter().map(|n| t.column_index(n).map_or(CellValue::Missing, |i| row[i].clone())).collect());
            }
        }
        return (names.len(), out);
    }
    let lk = l.column_index("k").unwrap();
    let rk = r.column_index("k").unwrap();
    let right_rest = |row: Option<&Vec<CellValue>>| -> Vec<CellValue> {
        (0..r.columns.len()).filter(|&i| i != rk).map(|i| row.map_or(CellValue::Missing, |r| r[i].clone())).collect()
    };
    let matches = |a: &CellValue, b: &CellValue| *a != CellValue::Missing && *b != CellValue::Missing && a == b;
    let mut out = Vec::new();
    let mut right_used = vec![false; rv.len()];
    for lrow in &lv {
        let mut any = false;
        for (j, rrow) in rv.iter().enumerate() {
            if matches(&lrow[lk], &rrow[rk]) {
                any = true;
                right_used[j] = true;
                let mut row = lrow.clone();
                row.extend(right_rest(Some(rrow)));
                out.push(row);
            }
        }
        if !any && strategy == MergeStrategy::Left {
            let mut row = lrow.clone();
            row.extend(right_rest(None));
            out.push(row);
        }
    }
    if strategy == MergeStrategy::Right {
        for (j, rrow) in rv.iter().enumerate() {
            if !right_used[j] {
                let mut row: Vec<CellValue> = (0..l.columns.len()).map(|i| if i == lk { rrow[rk].clone() } else { CellValue::Missing }).collect();
                row.extend(right_rest(Some(rrow)));
                out.push(row);
            }
        }
    }
    (l.columns.len() + r.columns.len() - 1, out)
}

fn join_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x701);
    let strategies = [MergeStrategy::Inner, MergeStrategy::Left, MergeStrategy::Right, MergeStrategy::Union];
    let mut rows_checked = 0;
    for pair in 0..100 {
        let types: BTreeMap<&str, ValueType> =
            NAMES.iter().map(|n| (*n, if rng.gen_bool(0.5) { ValueType::Number } else { ValueType::Text })).collect();
        let l = random_table(&mut rng, "L", &types);
        let r = random_table(&mut rng, "R", &types);
        for s in strategies {
            let out = merge_instances(&[&l, &r], s, &["k".into(), "k".into()], MergeOptions::default())
                .map_err(|e| format!("pair {pair} {s:?}: {e}"))?;
            let (width, want) = oracle_merge(&l, &r, s);
            ensure!(out.columns.len() == width, "pair {pair} {s:?}: {} columns, oracle {width}", out.columns.len());
            ensure!(multiset(&out.values()) == multiset(&want), "pair {pair} {s:?}: row multisets differ");
            rows_checked += want.len();
        }
    }
    Ok(format!("400/400 merges (100 pairs x 4 strategies, {rows_checked} rows)"))
}

// 4. Plan atomicity

const PAGE: &str = "https://shop.example/cameras";

fn atomicity_base() -> Script {
    let mut s = Script::new();
    s.page(11, 15, SiteStyle::Generic, PAGE);
    s.table(
        "Cams",
        &[("Title", ValueType::Text), ("Brand", ValueType::Text), ("Price", ValueType::Number), ("Rating", ValueType::Number), ("Tag", ValueType::Text)],
        vec![
            vec![text("Alpha 7"), text("Sony"), num(1899.0), num(4.7), text("$1,899.00")],
            vec![text("EOS R8"), text("Canon"), num(1299.0), CellValue::Missing, text("$1,299.00")],
            vec![text("Z6 II"), text("Nikon"), num(1599.0), num(4.5), text("$1,599.00")],
            vec![text("X-T5"), text("Fujifilm"), num(1699.0), num(4.8), text("$1,699.00")],
            vec![text("ZV-E10"), text("Sony"), num(699.0), num(4.2), text("$699.00")],
        ],
    );
    s.table(
        "Shop",
        &[("Title", ValueType::Text), ("Price", ValueType::Number), ("Stock", ValueType::Number)],
        vec![
            vec![text("Alpha 7"), num(1850.0), num(3.0)],
            vec![text("Z6 II"), num(1550.0), num(0.0)],
            vec![text("G7 X"), num(749.0), num(12.0)],
        ],
    );
    s
}

fn plans() -> Vec<Vec<(&'static str, Value)>> {
    let cams = "Cams";
    vec![
        vec![
            ("tableSort", json!({"instanceId": cams, "columnName": "Price", "order": "asc"})),
            ("tableFilter", json!({"instanceId": cams, "conditions": [{"column": "Price", "comparator": "lt", "operand": 1700}]})),
        ],
        vec![
            ("addComputedColumn", json!({"instanceId": cams, "formula": "[Price] * 2", "newColumnName": "Double"})),
            ("renameColumn", json!({"instanceId": cams, "oldColumnName": "Double", "newColumnName": "Twice"})),
            ("tableSort", json!({"instanceId": cams, "columnName": "Twice", "order": "desc"})),
        ],
        vec![
            ("fillMissingValues", json!({"instanceId": cams, "columnName": "Rating", "strategy": "mean"})),
            ("createVisualization", json!({"sourceInstanceId": cams, "chartType": "bar", "xAxis": "Brand", "yAxis": "Rating"})),
        ],
        vec![
            ("mergeInstances", json!({"sourceInstanceIds": [cams, "Shop"], "mergeStrategy": "inner", "joinColumns": ["Title", "Title"], "newInstanceName": "Joined"})),
            ("tableSort", json!({"instanceId": "Joined", "columnName": "Title", "order": "asc"})),
            ("createVisualization", json!({"sourceInstanceId": "Joined", "chartType": "scatter", "xAxis": "Stock", "yAxis": "Cams.Price"})),
        ],
        vec![
            ("mergeInstances", json!({"sourceInstanceIds": [cams, "Shop"], "mergeStrategy": "union", "newInstanceName": "All"})),
            ("fillMissingValues", json!({"instanceId": "All", "columnName": "Stock", "strategy": "constant", "constant": 0})),
            ("aggregate", json!({"instanceId": "All", "groupBy": ["Title"], "aggregations": [{"column": "Stock", "fn": "sum"}]})),
        ],
        vec![
            ("searchAndReplace", json!({"instanceId": cams, "searchPattern": "Sony", "replaceWith": "SONY", "columnName": "Brand"})),
            ("tableFilter", json!({"instanceId": cams, "conditions": [{"column": "Brand", "comparator": "eq", "operand": "SONY"}]})),
        ],
        vec![
            ("convertColumnType", json!({"instanceId": cams, "columnName": "Tag", "targetType": "number"})),
            ("addComputedColumn", json!({"instanceId": cams, "formula": "[Tag] - [Price]", "newColumnName": "Diff"})),
        ],
        vec![
            ("formatColumn", json!({"instanceId": cams, "oldColumnName": "Tag", "formatPattern": "currency"})),
            ("renameColumn", json!({"instanceId": cams, "oldColumnName": "Title", "newColumnName": "Name"})),
        ],
        vec![
            ("aggregate", json!({"instanceId": cams, "groupBy": ["Brand"], "aggregations": [{"column": "Price", "fn": "mean"}], "newInstanceName": "ByBrand"})),
            ("tableSort", json!({"instanceId": "ByBrand", "columnName": "mean(Price)", "order": "desc"})),
            ("createVisualization", json!({"sourceInstanceId": "ByBrand", "chartType": "bar", "xAxis": "Brand", "yAxis": "mean(Price)"})),
        ],
        vec![
            ("positionalTransform", json!({"instanceId": cams, "op": "delete-rows", "indices": [0, 1]})),
            ("positionalTransform", json!({"instanceId": cams, "op": "move-col", "indices": [0, 2]})),
        ],
        vec![
            ("reshape", json!({"instanceId": cams, "direction": "fold", "keyColumns": ["Title"], "valueColumns": ["Price", "Rating"]})),
            ("tableFilter", json!({"instanceId": cams, "conditions": [{"column": "variable", "comparator": "eq", "operand": "Price"}]})),
        ],
        vec![
            ("defineRule", json!({"name": "cheap-first", "steps": [{"callId": "r1", "tool": "tableSort", "args": {"instanceId": "$instance", "columnName": "Price", "order": "asc"}}]})),
            ("applyRule", json!({"ruleName": "cheap-first", "instanceId": cams})),
            ("applyRule", json!({"ruleName": "cheap-first", "instanceId": "Shop"})),
        ],
        vec![
            ("createVisualization", json!({"sourceInstanceId": cams, "chartType": "scatter", "xAxis": "Price", "yAxis": "Rating", "newInstanceName": "Value Map"})),
            ("updateVisualization", json!({"visualizationId": "Value_Map", "encodings": {"color": "Brand"}})),
        ],
        vec![
            ("extractBatch", json!({"pageUrl": PAGE, "pattern": {"css": "li.product-card:not(.sponsored)"}, "fields": [{"name": "Title", "css": "h2"}, {"name": "Price", "css": "span.price"}], "newInstanceName": "Page"})),
            ("convertColumnType", json!({"instanceId": "Page", "columnName": "Price", "targetType": "number"})),
            ("tableSort", json!({"instanceId": "Page", "columnName": "Price", "order": "asc"})),
        ],
        vec![
            ("updateInstance", json!({"instanceId": cams, "addColumns": [{"name": "Note", "type": "text"}], "edits": [{"row": 0, "column": "Note", "value": "kit lens"}]})),
            ("fillMissingValues", json!({"instanceId": cams, "columnName": "Note", "strategy": "constant", "constant": "none"})),
        ],
        vec![
            ("mergeInstances", json!({"sourceInstanceIds": ["Shop", cams], "mergeStrategy": "left", "joinColumns": ["Title", "Title"], "newInstanceName": "ShopLeft"})),
            ("fillMissingValues", json!({"instanceId": "ShopLeft", "columnName": "Brand", "strategy": "constant", "constant": "unknown"})),
            ("positionalTransform", json!({"instanceId": "ShopLeft", "op": "delete-cols", "indices": [5]})),
        ],
        vec![
            ("renameColumn", json!({"instanceId": "Shop", "oldColumnName": "Stock", "newColumnName": "Qty"})),
            ("addComputedColumn", json!({"instanceId": "Shop", "formula": "[Price] * [Qty]", "newColumnName": "Value"})),
            ("aggregate", json!({"instanceId": "Shop", "groupBy": [], "aggregations": [{"column": "Value", "fn": "sum"}]})),
        ],
        vec![
            ("tableFilter", json!({"instanceId": cams, "conditions": [{"column": "Rating", "comparator": "gte", "operand": 4.5}]})),
            ("tableSort", json!({"instanceId": cams, "columnName": "Rating", "order": "desc"})),
            ("createVisualization", json!({"sourceInstanceId": cams, "chartType": "histogram", "xAxis": "Price"})),
        ],
        vec![
            ("mergeInstances", json!({"sourceInstanceIds": [cams, "Shop"], "mergeStrategy": "right", "joinColumns": ["Title", "Title"], "newInstanceName": "RightJ"})),
            ("tableSort", json!({"instanceId": "RightJ", "columnName": "Title", "order": "asc"})),
            ("renameColumn", json!({"instanceId": "RightJ", "oldColumnName": "Stock", "newColumnName": "In Stock"})),
        ],
        vec![
            ("searchAndReplace", json!({"instanceId": "Shop", "searchPattern": "\\d+", "replaceWith": "#", "columnName": "Title", "isRegex": true})),
            ("updateInstance", json!({"instanceId": "Shop", "newName": "Masked"})),
            ("tableSort", json!({"instanceId": "Shop", "columnName": "Title", "order": "asc"})),
        ],
    ]
}

/// The same step pointed at something that does not exist.
fn poisoned(tool: &str, args: &Value) -> (String, Value) {
    let mut a = args.clone();
    for key in ["instanceId", "sourceInstanceId", "visualizationId", "ruleName"] {
        if a.get(key).is_some() {
            a[key] = json!("No_Such_Thing");
            return (tool.to_string(), a);
        }
    }
    if a.get("sourceInstanceIds").is_some() {
        a["sourceInstanceIds"][0] = json!("No_Such_Thing");
        return (tool.to_string(), a);
    }
    if a.get("pageUrl").is_some() {
        a["pageUrl"] = json!("https://nowhere.example/");
        return (tool.to_string(), a);
    }
    ("tableSort".into(), json!({"instanceId": "No_Such_Thing", "columnName": "x", "order": "asc"}))
}

fn serialized(ws: &Workspace) -> String {
    format!("{}\n{}", serde_json::to_string(&ws.history()).unwrap(), ws.document(ws.current_id()).unwrap().to_json())
}

fn to_calls(steps: &[(String, Value)]) -> Result<Vec<ToolCall>, String> {
    steps.iter().enumerate().map(|(i, (t, a))| ToolCall::parse(format!("p{i}"), t, a.clone()).map_err(|e| format!("{t}: {e}"))).collect()
}

fn plan_atomicity() -> Outcome {
    let all = plans();
    ensure!(all.len() == 20, "expected 20 plans, have {}", all.len());
    let mut cases = 0;
    for (p, plan) in all.iter().enumerate() {
        let steps: Vec<(String, Value)> = plan.iter().map(|(t, a)| (t.to_string(), a.clone())).collect();
        ensure!(steps.len() >= 2, "plan {p} is not composite");

        let mut s = atomicity_base();
        let before = serialized(&s.ws);
        let env = ExecEnv { snapshots: &s.store };
        let calls = to_calls(&steps).map_err(|e| format!("plan {p}: {e}"))?;
        s.ws.execute_plan("clean", &calls, &env).map_err(|f| format!("plan {p} fails unmodified at step {}: {}", f.step, f.cause))?;
        ensure!(serialized(&s.ws) != before, "plan {p} changes nothing");

        for i in 0..steps.len() {
            let mut s = atomicity_base();
            let before = serialized(&s.ws);
            let mut bad = steps.clone();
            bad[i] = poisoned(&steps[i].0, &steps[i].1);
            let calls = to_calls(&bad).map_err(|e| format!("plan {p} step {i}: {e}"))?;
            let env = ExecEnv { snapshots: &s.store };
            match s.ws.execute_plan("injected", &calls, &env) {
                Ok(_) => return Err(format!("plan {p}: injected failure at step {i} went through")),
                Err(f) => ensure!(f.step == i, "plan {p}: failure injected at {i} reported at {}", f.step),
            }
            ensure!(serialized(&s.ws) == before, "plan {p}: workspace changed after failing at step {i}");
            cases += 1;
        }
    }
    Ok(format!("{cases}/{cases} injected failures left the workspace byte-identical"))
}

// 5. Idle gate

struct CountingPlanner(usize);

impl MacroPlanner for CountingPlanner {
    fn plan_for(&mut self, req: &MacroRequest) -> Result<workbench_core::ToolPlan, LlmError> {
        self.0 += 1;
        TemplatesOnly.plan_for(req)
    }
}

fn orders() -> Script {
    let mut s = Script::new();
    s.table(
        "Orders",
        &[("Item", ValueType::Text), ("Price", ValueType::Number), ("Quantity", ValueType::Number)],
        vec![vec![text("Cap"), num(9.5), num(3.0)], vec![text("Strap"), num(24.0), num(1.0)]],
    );
    s.event(EventKind::TableCreated { instance_id: "Orders".into() });
    s
}

fn idle_gate() -> Outcome {
    let threshold = GuidanceConfig::default().idle_threshold_ms;
    ensure!(threshold == 5000, "idle threshold is {threshold} ms");
    let mut rng = ChaCha8Rng::seed_from_u64(0x1d1e);
    let mut durations: Vec<u64> = vec![0, 1, 4999, 5000, 5001];
    while durations.len() < 1000 {
        durations.push(rng.gen_range(0..15_000));
    }
    let s = orders();
    let env = ExecEnv { snapshots: &s.store };
    let (mut ran, mut held) = (0, 0);
    for d in durations {
        let mut e = GuidanceEngine::new(GuidanceConfig::default());
        for ev in &s.events {
            e.record_event(ev.clone()).unwrap();
        }
        let mut planner = CountingPlanner(0);
        let mut times: Vec<u64> = (0..rng.gen_range(0..4)).map(|_| rng.gen_range(0..=d)).collect();
        times.push(d);
        times.sort_unstable();
        let mut opened = false;
        for t in times {
            let r = e.cycle(&s.ws, &env, &mut planner, s.t + t).unwrap();
            let want = t >= 5000 && !opened;
            ensure!(r.macro_ran == want, "idle {t} ms (of {d}): macro ran = {}", r.macro_ran);
            opened |= r.macro_ran;
        }
        ensure!((planner.0 > 0) == (d >= 5000), "idle {d} ms: planner called {} times", planner.0);
        if d >= 5000 {
            ran += 1;
        } else {
            held += 1;
        }
    }
    Ok(format!("1000/1000 durations ({ran} at or over 5000 ms ran, {held} below held)"))
}

// 6. Context cap

struct Recorder {
    lengths: std::rc::Rc<std::cell::RefCell<Vec<usize>>>,
}

impl PlanProvider for Recorder {
    fn name(&self) -> &str {
        "recorder"
    }

    fn complete(&mut self, req: &PlanRequest) -> Result<String, LlmError> {
        self.lengths.borrow_mut().push(req.bundle.interaction_history.events.len());
        Err(LlmError::ProviderUnavailable("recording only".into()))
    }
}

fn random_event(rng: &mut ChaCha8Rng, t: u64) -> InteractionEvent {
    let kind = match rng.gen_range(0..9) {
        0 => EventKind::ChatSent { text: "sort by price".into() },
        1 => EventKind::CellEdited { instance_id: "Orders".into(), row: 0, column: "Item".into(), before: Some("Cap".into()), after: Some("Hat".into()) },
        2 => EventKind::SortApplied { instance_id: "Orders".into(), column: "Price".into(), order: workbench_core::transform::sort::SortOrder::Asc },
        3 => EventKind::ViewChanged { view: View::Editor, instance_id: Some("Orders".into()), url: None, visible: None },
        4 => EventKind::SelectionMade { instance_id: Some("Orders".into()), rows: vec![0], snapshot_id: None, node_id: None },
        5 => EventKind::InstanceMoved { instance_id: "Orders".into() },
        6 => EventKind::TableCreated { instance_id: "Orders".into() },
        7 => EventKind::ClockAdvanced,
        _ => EventKind::VizEdited { instance_id: "Chart1".into() },
    };
    let mut e = InteractionEvent::new(t, kind);
    if rng.gen_bool(0.2) {
        e.major = !e.major;
    }
    e
}

fn context_cap() -> Outcome {
    let cap = GuidanceConfig::default().context_event_cap;
    ensure!(cap == 15 && ContextOptions::default().event_cap == 15, "cap is {cap}");
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de);
    let s = orders();
    let env = ExecEnv { snapshots: &s.store };
    let lengths = std::rc::Rc::new(std::cell::RefCell::new(Vec::new()));
    let mut longest = 0;
    for stream in 0..1000 {
        let n = rng.gen_range(0..120);
        let mut t = s.t;
        let events: Vec<InteractionEvent> = (0..n)
            .map(|_| {
                t += rng.gen_range(1..3000);
                random_event(&mut rng, t)
            })
            .collect();
        let mut e = GuidanceEngine::new(GuidanceConfig::default());
        for ev in &events {
            e.record_event(ev.clone()).unwrap();
        }
        let majors: Vec<&InteractionEvent> = events.iter().filter(|e| e.major).collect();
        let newest = &majors[majors.len().saturating_sub(15)..];

        let kept = e.context_events();
        ensure!(kept.len() <= 15, "stream {stream}: engine keeps {}", kept.len());
        ensure!(kept.iter().eq(newest.iter().copied()), "stream {stream}: engine keeps the wrong events");

        let bundle = build_context(s.ws.state(), &s.store, e.focus(), &[], e.log(), ContextOptions::default());
        let sent = &bundle.interaction_history.events;
        ensure!(sent.len() <= 15, "stream {stream}: context carries {}", sent.len());
        ensure!(sent.iter().eq(newest.iter().copied()), "stream {stream}: context carries the wrong events");
        longest = longest.max(sent.len());

        let mut gw = Gateway::new(Box::new(Recorder { lengths: lengths.clone() }), LlmConfig::default());
        e.cycle(&s.ws, &env, &mut gw, t + 6000).unwrap();
    }
    let seen = lengths.borrow();
    ensure!(!seen.is_empty(), "no macro request reached the provider");
    let worst = seen.iter().copied().max().unwrap_or(0);
    ensure!(worst <= 15, "a provider request carried {worst} events");
    Ok(format!("1000/1000 streams, longest history {longest}, {} provider requests all <= 15", seen.len()))
}

// 7. Fill programs

fn fill_programs() -> Outcome {
    let cases = corpus();
    ensure!(cases.len() == 30, "corpus has {} cases", cases.len());
    ensure!(cases.iter().any(|c| c.name.contains("first and last")), "corpus lacks the first/last name case");
    let mut exact = 0;
    for c in &cases {
        let p = infer_fill_program(&c.examples).map_err(|e| format!("{}: {e}", c.name))?;
        for ex in &c.examples {
            ensure!(p.expr.eval(&ex.inputs).as_deref() == Some(ex.output.as_str()), "{}: {p} misses an example", c.name);
        }
        match smallest_size_up_to_3(&c.examples) {
            Some(best) => {
                ensure!(p.size() == best, "{}: size {} but a size-{best} program exists", c.name, p.size());
                exact += 1;
            }
            None => ensure!(p.size() > 3, "{}: the exhaustive search missed {p}", c.name),
        }
    }
    Ok(format!("30/30 consistent; {exact} with a program of size <= 3, all minimal"))
}

// 8. Scenario golden run

fn scripted(t: &workbench_core::eval::LoadedTask) -> Result<Replayed, String> {
    replay_task(t, ProviderKind::Scripted, &LlmConfig::default(), ReplayOptions::default()).map_err(|e| format!("{}: {e}", t.task.id))
}

/// Titles of the non-sponsored cards, read with a separate HTML parser.
fn page_titles(html: &str) -> Vec<String> {
    let doc = Html::parse_document(html);
    let sel = Selector::parse("div.s-result-item:not(.AdHolder) h2, li.s-item:not(.s-item--promoted) h2").unwrap();
    doc.select(&sel).map(|e| e.text().collect::<String>().trim().to_string()).collect()
}

fn golden_run() -> Outcome {
    let (t, _) = camera_scenario();
    let mut hashes = BTreeSet::new();
    let mut detail = String::new();
    for run in 0..5 {
        let r = scripted(&t)?;
        ensure!(r.report.invalid_actions.is_empty(), "run {run}: {:?}", r.report.invalid_actions);
        hashes.insert(r.report.final_hash.clone());
        if run > 0 {
            continue;
        }
        let state = r.session.ws.state();
        let mut want: Vec<String> = t.pages.iter().flat_map(|p| page_titles(&p.html)).collect();
        want.sort();
        let merged = state
            .tables()
            .find(|tb| {
                let Some(c) = tb.column_index("Title") else { return false };
                let mut got: Vec<String> = (0..tb.row_count()).map(|i| tb.value(i, c).display_string().unwrap_or_default()).collect();
                got.sort();
                got == want
            })
            .ok_or("no table holds exactly both shops' rows")?;
        let c = merged.column_index("Title").unwrap();
        let urls: BTreeSet<&str> = merged.rows.iter().filter_map(|row| row[c].source.as_ref().map(|s| s.url.as_str())).collect();
        ensure!(urls == BTreeSet::from([AMAZON_CAMERAS, EBAY_CAMERAS]), "merged rows trace to {urls:?}");

        let chart = state
            .visualizations_of(&merged.id)
            .find(|v| v.chart_type == ChartType::Scatter)
            .ok_or_else(|| format!("no scatter over {}", merged.name))?;
        let enc = |ch| chart.encodings.get(&ch).map(String::as_str);
        ensure!(
            enc(Channel::X) == Some("Price") && enc(Channel::Y) == Some("User Rating") && enc(Channel::Color) == Some("Resolution"),
            "scatter encodings {:?}",
            chart.encodings
        );
        detail = format!("'{}' has {} rows from both shops; scatter x=Price y=User Rating color=Resolution", merged.name, merged.row_count());
    }
    ensure!(hashes.len() == 1, "5 runs gave {} different hashes", hashes.len());
    Ok(format!("{detail}; hash {} stable over 5 runs", &hashes.iter().next().unwrap()[..12]))
}

// 9. Difficulty

fn count_oracle(flags: [bool; 3]) -> Difficulty {
    match flags.iter().filter(|f| **f).count() {
        0 => Difficulty::Easy,
        1 | 2 => Difficulty::Medium,
        _ => Difficulty::Hard,
    }
}

const TRANSFORMS: &[&str] = &[
    "addComputedColumn",
    "tableSort",
    "tableFilter",
    "mergeInstances",
    "renameColumn",
    "formatColumn",
    "searchAndReplace",
    "convertColumnType",
    "fillMissingValues",
    "reshape",
    "aggregate",
    "positionalTransform",
    "applyRule",
];

fn difficulty() -> Outcome {
    for bits in 0u8..8 {
        let flags = [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0];
        let got = classify(Criteria { multi_page: flags[0], transform_ops_gt_5: flags[1], needs_viz: flags[2] });
        ensure!(got == count_oracle(flags), "flags {flags:?} gave {got:?}");
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_benchmark(dir.path()).map_err(|e| e.to_string())?;
    let manifest = BenchmarkManifest::load(dir.path()).map_err(|e| e.to_string())?;
    let mut mix = [0; 3];
    for entry in &manifest.tasks {
        let t = load_task(&dir.path().join(&entry.file)).map_err(|e| format!("{}: {e}", entry.id))?;
        ensure!(t.difficulty() == entry.difficulty, "{}: classifier says {:?}, manifest {:?}", entry.id, t.difficulty(), entry.difficulty);

        // Flags read off what the task actually does.
        let run = scripted(&t)?;
        let ws = &run.session.ws;
        let urls: BTreeSet<&str> = t.pages.iter().map(|p| p.url.as_str()).collect();
        let ops = ws.lineage(ws.current_id()).unwrap().iter().filter(|l| TRANSFORMS.contains(&l.tool.as_str())).count();
        let viz = ws.state().visualizations().next().is_some();
        let observed = [urls.len() > 1, ops > 5, viz];
        let declared = t.task.criteria;
        ensure!(
            observed == [declared.multi_page, declared.transform_ops_gt_5, declared.needs_viz],
            "{}: observed {observed:?} ({ops} transform ops), declared {declared:?}",
            entry.id
        );
        ensure!(count_oracle(observed) == entry.difficulty, "{}: observed flags give {:?}", entry.id, count_oracle(observed));
        mix[Difficulty::ALL.iter().position(|d| *d == entry.difficulty).unwrap()] += 1;
    }
    ensure!(mix == [4, 4, 2], "manifest mix is {mix:?}");
    Ok(format!("8/8 flag combinations; {}/{} bundled tasks (4 easy, 4 medium, 2 hard)", manifest.tasks.len(), manifest.tasks.len()))
}

// 10. Timeline

/// One pass, growing the open period while category and gap allow.
fn linear_scan(events: &[TimelineEvent], gap: u64) -> Vec<Block> {
    let mut out: Vec<Block> = Vec::new();
    for e in events {
        match out.last_mut() {
            Some(b) if b.category == e.category && e.timestamp - b.end <= gap => {
                b.end = e.timestamp;
                b.count += 1;
            }
            _ => out.push(Block { category: e.category, start: e.timestamp, end: e.timestamp, count: 1 }),
        }
    }
    out
}

fn timeline_merge() -> Outcome {
    ensure!(DEFAULT_GAP_MS == 90_000, "default gap is {DEFAULT_GAP_MS} ms");
    let mut rng = ChaCha8Rng::seed_from_u64(0x7173);
    let mut blocks = 0;
    for stream in 0..100 {
        let n = rng.gen_range(0..200);
        let mut t = 0;
        let events: Vec<TimelineEvent> = (0..n)
            .map(|_| {
                t += if rng.gen_bool(0.15) { rng.gen_range(60_000..240_000) } else { rng.gen_range(0..30_000) };
                let category = if rng.gen_bool(0.7) { Category::DirectManipulation } else { *Category::ALL.choose(&mut rng).unwrap() };
                TimelineEvent { timestamp: t, category }
            })
            .collect();
        let got = merge_timeline(&events, 90_000).map_err(|e| format!("stream {stream}: {e}"))?;
        let want = linear_scan(&events, 90_000);
        ensure!(got == want, "stream {stream}: {} blocks, oracle {}", got.len(), want.len());
        blocks += got.len();
    }
    Ok(format!("100/100 streams ({blocks} periods) at 90000 ms"))
}

// 11. Latency and summary arithmetic

fn report_with(task: &str, difficulty: Difficulty, kinds: &[(GuidanceType, f64)], template: &RunReport) -> RunReport {
    let mut r = template.clone();
    r.task_id = task.into();
    r.difficulty = difficulty;
    r.entries = kinds
        .iter()
        .map(|(g, ms)| {
            let mut e = template.entries[0].clone();
            e.guidance_type = *g;
            e.latency_ms = *ms;
            e
        })
        .collect();
    r
}

fn label(task: &str, entry: usize, labeler: &str, label: Label) -> LabelRecord {
    LabelRecord { task: task.into(), entry, labeler: labeler.into(), label }
}

fn latency_and_summary() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cycles = 0;
    let mut template = None;
    for (t, _) in bundled_tasks() {
        let run = scripted(&t)?;
        cycles += run.report.cycle_latencies_ms.len();
        worst = run.report.cycle_latencies_ms.iter().copied().fold(worst, f64::max);
        template.get_or_insert(run.report);
    }
    ensure!(cycles > 0, "no evaluation cycles ran");
    ensure!(worst < 200.0, "slowest cycle took {worst:.1} ms");

    use GuidanceType::*;
    use Label::*;
    let template = template.unwrap();
    let reports = vec![
        report_with("a", Difficulty::Easy, &[(InSitu, 2.0), (InSitu, 4.0), (Peripheral, 9.0)], &template),
        report_with("b", Difficulty::Easy, &[(InSitu, 6.0), (Chat, 30.0)], &template),
        report_with("c", Difficulty::Hard, &[(Peripheral, 1.0), (Chat, 10.0), (Chat, 20.0)], &template),
    ];
    let labels = vec![
        label("a", 0, "p", Correct),
        label("a", 0, "q", Correct),
        label("a", 1, "p", Correct),
        label("a", 1, "q", Incorrect),
        label("a", 2, "p", NotSure),
        label("a", 2, "q", Correct),
        label("b", 0, "p", Incorrect),
        label("b", 0, "q", Incorrect),
        label("b", 1, "p", Correct),
        label("c", 1, "p", Incorrect),
        label("c", 1, "q", Correct),
        label("c", 2, "p", NotSure),
    ];
    let s: Summary = summarize_runs(&reports, &labels).map_err(|e| e.to_string())?;
    // Worked by hand: a0 1, a1 0.5, b0 0, b1 1, c1 0.5; a2 and c2 excluded.
    ensure!(s.labeled == 5 && s.excluded == 2, "labeled {} excluded {}", s.labeled, s.excluded);
    ensure!((s.accuracy.unwrap() - 3.0 / 5.0).abs() < 1e-12, "overall accuracy {:?}", s.accuracy);
    let row = |d, g| s.rows.iter().find(|r| r.difficulty == d && r.guidance_type == g).unwrap();
    let easy_in_situ = row(Difficulty::Easy, InSitu);
    ensure!(easy_in_situ.suggestions == 3 && easy_in_situ.mean_count == 1.5, "easy in-situ counts {easy_in_situ:?}");
    ensure!(easy_in_situ.mean_latency_ms == Some(4.0), "easy in-situ latency {:?}", easy_in_situ.mean_latency_ms);
    ensure!(easy_in_situ.accuracy == Some(0.5), "easy in-situ accuracy {:?}", easy_in_situ.accuracy);
    let easy_peripheral = row(Difficulty::Easy, Peripheral);
    ensure!(easy_peripheral.labeled == 0 && easy_peripheral.excluded == 1 && easy_peripheral.accuracy.is_none(), "{easy_peripheral:?}");
    let hard_chat = row(Difficulty::Hard, Chat);
    ensure!(hard_chat.accuracy == Some(0.5) && hard_chat.excluded == 1 && hard_chat.mean_latency_ms == Some(15.0), "{hard_chat:?}");
    Ok(format!("slowest of {cycles} cycles {worst:.2} ms (< 200); fixture accuracy 60.0% over 5 labeled, 2 excluded"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("trigger conformance", trigger_conformance),
        ("batch extraction recovery", batch_extraction),
        ("join oracle equivalence", join_oracle),
        ("plan atomicity", plan_atomicity),
        ("idle gate", idle_gate),
        ("context cap", context_cap),
        ("fill-program consistency and minimality", fill_programs),
        ("scenario golden run", golden_run),
        ("difficulty classifier", difficulty),
        ("timeline merge", timeline_merge),
        ("pipeline latency and summary arithmetic", latency_and_summary),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
