//! The bundled benchmark: ten authored tasks over generated result pages,
//! four easy, four medium and two hard, each with a driver script and the
//! scripted replies its chat turns need.
//!
//! On disk:
//!
//! ```text
//! benchmark.json          task list with authored difficulty
//! pages/manifest.json     page file to URL
//! pages/*.html
//! tasks/<id>.json
//! ```

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::driver::DriverStep;
use super::task::{classify, BenchmarkManifest, BenchmarkTask, Criteria, Difficulty, LoadedPage, LoadedTask, ManifestTask, TaskError, BENCHMARK_MANIFEST};
use crate::extract::pagegen::{generate_list_page, GeneratedPage, SiteStyle};
use crate::extract::snapshot::{ManifestEntry, SnapshotManifest, MANIFEST_FILE};
use crate::guidance::{EventKind, RuleId, View};
use crate::llm::provider::normalize_chat;
use crate::llm::Fixture;
use crate::table::Column;
use crate::transform::sort::SortOrder;
use crate::value::ValueType;

pub const CAMERA_TASK: &str = "camera-scenario";
pub const AMAZON_CAMERAS: &str = "https://www.amazon.example/s?k=mirrorless+camera";
pub const EBAY_CAMERAS: &str = "https://www.ebay.example/sch/i.html?_nkw=mirrorless+camera";

const IMAGE: &str = "img.image";
const TITLE: &str = "h2.title";
const PRICE: &str = "span.price";
const RATING: &str = "span.user-rating";
const RESOLUTION: &str = "span.resolution";

fn card(style: SiteStyle) -> &'static str {
    match style {
        SiteStyle::Generic => "li.product-card:not(.sponsored)",
        SiteStyle::AmazonLike => "div.s-result-item:not(.AdHolder)",
        SiteStyle::EbayLike => "li.s-item:not(.s-item--promoted)",
    }
}

struct Page {
    file: String,
    style: SiteStyle,
    generated: GeneratedPage,
}

fn page(file: &str, seed: u64, n: usize, style: SiteStyle, url: &str, missing_rating: bool) -> Page {
    Page { file: file.to_string(), style, generated: generate_list_page(seed, n, style, url, missing_rating) }
}

impl Page {
    fn url(&self) -> &str {
        &self.generated.url
    }
}

/// Driver script and chat fixtures under construction.
#[derive(Default)]
struct Script {
    steps: Vec<DriverStep>,
    fixtures: Vec<Fixture>,
}

impl Script {
    fn push(&mut self, s: DriverStep) -> &mut Self {
        self.steps.push(s);
        self
    }

    fn workspace(&mut self, title: &str) -> &mut Self {
        self.push(DriverStep::Workspace { title: title.into() })
    }

    fn on_page(&mut self, p: &Page) -> &mut Self {
        self.push(DriverStep::View { view: View::Page, instance: None, page: Some(p.url().into()) })
    }

    fn in_editor(&mut self, id: &str) -> &mut Self {
        self.push(DriverStep::View { view: View::Editor, instance: Some(id.into()), page: None })
    }

    fn table(&mut self, id: &str, name: &str, cols: &[(&str, ValueType)]) -> &mut Self {
        let columns = cols.iter().map(|(n, t)| Column::new(*n, *t)).collect();
        self.push(DriverStep::CreateTable { id: id.into(), name: Some(name.into()), columns })
    }

    /// Drags the given fields of the first `rows` records into the table,
    /// one record at a time.
    fn capture(&mut self, p: &Page, table: &str, fields: &[(&str, &str)], rows: usize) -> &mut Self {
        for row in 0..rows {
            for (column, sel) in fields {
                self.push(DriverStep::Capture {
                    page: p.url().into(),
                    css: format!("{} {sel}", card(p.style)),
                    index: row,
                    instance: table.into(),
                    row,
                    column: (*column).into(),
                });
            }
        }
        self
    }

    fn apply(&mut self, rule: RuleId) -> &mut Self {
        self.push(DriverStep::Apply { rule, permit: false })
    }

    fn idle(&mut self) -> &mut Self {
        self.push(DriverStep::AdvanceClock { ms: 6000 })
    }

    fn tool(&mut self, tool: &str, args: Value) -> &mut Self {
        self.push(DriverStep::Tool { tool: tool.into(), args, event: None })
    }

    fn tool_with(&mut self, tool: &str, args: Value, event: EventKind) -> &mut Self {
        self.push(DriverStep::Tool { tool: tool.into(), args, event: Some(event) })
    }

    fn edit(&mut self, table: &str, row: usize, column: &str, value: &str) -> &mut Self {
        self.push(DriverStep::Edit { instance: table.into(), row, column: column.into(), value: Some(value.into()) })
    }

    /// A chat turn and the reply the scripted provider gives it.
    fn chat(&mut self, text: &str, prose: &str, plan: Vec<Value>) -> &mut Self {
        self.fixtures.push(Fixture::with_plan(format!("chat:{}", normalize_chat(text)), prose, plan));
        self.push(DriverStep::Chat { text: text.into() })
    }
}

fn step(tool: &str, args: Value) -> Value {
    json!({"tool": tool, "args": args})
}

fn task(id: &str, statement: &str, criteria: Criteria, pages: Vec<Page>, script: Script) -> (LoadedTask, Difficulty) {
    let difficulty = classify(criteria);
    let snapshot_files = pages.iter().map(|p| ManifestEntry { file: format!("../pages/{}", p.file), url: p.url().into() }).collect();
    let task = BenchmarkTask {
        id: id.into(),
        statement: statement.into(),
        snapshot_files,
        criteria,
        driver: script.steps,
        fixtures: script.fixtures,
    };
    let pages = pages
        .into_iter()
        .map(|p| LoadedPage {
            file: format!("../pages/{}", p.file),
            url: p.generated.url.clone(),
            records: p.generated.records.len(),
            html: p.generated.html,
        })
        .collect();
    (LoadedTask { task, path: PathBuf::from(format!("tasks/{id}.json")), pages }, difficulty)
}

const NONE: Criteria = Criteria { multi_page: false, transform_ops_gt_5: false, needs_viz: false };

fn extract_twenty() -> (LoadedTask, Difficulty) {
    let p = page("shop-cameras.html", 11, 20, SiteStyle::Generic, "https://shop.example/cameras", false);
    let mut s = Script::default();
    s.workspace("Camera list").on_page(&p).table("Items", "Items", &[("Title", ValueType::Text), ("Price", ValueType::Text)]);
    s.capture(&p, "Items", &[("Title", TITLE), ("Price", PRICE)], 2).apply(RuleId::BatchExtraction);
    task("extract-20-cameras", "Collect the title and price of every camera on the page into a table.", NONE, vec![p], s)
}

fn sort_by_price() -> (LoadedTask, Difficulty) {
    let p = page("amazon-compact.html", 12, 14, SiteStyle::AmazonLike, "https://www.amazon.example/s?k=compact+camera", false);
    let mut s = Script::default();
    s.workspace("Cheap compact cameras").on_page(&p).table("Deals", "Deals", &[("Title", ValueType::Text), ("Price", ValueType::Text)]);
    s.capture(&p, "Deals", &[("Title", TITLE), ("Price", PRICE)], 2).apply(RuleId::BatchExtraction);
    s.in_editor("Deals");
    s.tool("convertColumnType", json!({"instanceId": "Deals", "columnName": "Price", "targetType": "number"}));
    s.tool_with(
        "tableSort",
        json!({"instanceId": "Deals", "columnName": "Price", "order": "asc"}),
        EventKind::SortApplied { instance_id: "Deals".into(), column: "Price".into(), order: SortOrder::Asc },
    );
    task("sort-compact-by-price", "List the compact cameras on the page from cheapest to most expensive.", NONE, vec![p], s)
}

fn rated_listings() -> (LoadedTask, Difficulty) {
    let p = page("ebay-vlogging.html", 13, 18, SiteStyle::EbayLike, "https://www.ebay.example/sch/vlogging", true);
    let mut s = Script::default();
    s.workspace("Vlogging camera ratings").on_page(&p).table(
        "Listings",
        "Listings",
        &[("Title", ValueType::Text), ("User Rating", ValueType::Text)],
    );
    s.capture(&p, "Listings", &[("Title", TITLE), ("User Rating", RATING)], 2).apply(RuleId::BatchExtraction);
    s.in_editor("Listings");
    s.tool("convertColumnType", json!({"instanceId": "Listings", "columnName": "User Rating", "targetType": "number"}));
    s.tool("fillMissingValues", json!({"instanceId": "Listings", "columnName": "User Rating", "strategy": "mean"}));
    task("rated-vlogging-cameras", "Tabulate vlogging camera ratings, filling unrated listings with the average rating.", NONE, vec![p], s)
}

fn brand_column() -> (LoadedTask, Difficulty) {
    let p = page("shop-mirrorless.html", 14, 16, SiteStyle::Generic, "https://shop.example/mirrorless", false);
    let brand = |i: usize| p.generated.records[i].title.split(' ').next().unwrap_or_default().to_string();
    let (b0, b1) = (brand(0), brand(1));
    let mut s = Script::default();
    s.workspace("Mirrorless brands").on_page(&p).table("Models", "Models", &[("Title", ValueType::Text)]);
    s.capture(&p, "Models", &[("Title", TITLE)], 2).apply(RuleId::BatchExtraction);
    s.in_editor("Models");
    s.tool("updateInstance", json!({"instanceId": "Models", "addColumns": [{"name": "Brand", "type": "text"}]}));
    s.edit("Models", 0, "Brand", &b0).edit("Models", 1, "Brand", &b1).apply(RuleId::Autocomplete);
    task("mirrorless-brands", "List the mirrorless cameras on the page with a column for each camera's brand.", NONE, vec![p], s)
}

fn two_shops() -> (LoadedTask, Difficulty) {
    let a = page("amazon-dslr.html", 21, 12, SiteStyle::AmazonLike, "https://www.amazon.example/s?k=dslr", false);
    let b = page("ebay-dslr.html", 22, 15, SiteStyle::EbayLike, "https://www.ebay.example/sch/dslr", false);
    let cols = [("Title", ValueType::Text), ("Price", ValueType::Text)];
    let mut s = Script::default();
    s.workspace("DSLR prices").on_page(&a).table("Table1", "Amazon DSLR", &cols);
    s.capture(&a, "Table1", &[("Title", TITLE), ("Price", PRICE)], 2).apply(RuleId::BatchExtraction);
    s.on_page(&b).table("Table2", "eBay DSLR", &cols);
    s.capture(&b, "Table2", &[("Title", TITLE), ("Price", PRICE)], 2).apply(RuleId::BatchExtraction);
    s.idle().apply(RuleId::JoiningTables);
    let c = Criteria { multi_page: true, ..NONE };
    task("dslr-two-shops", "Put the DSLR listings from both shops into one table with comparable prices.", c, vec![a, b], s)
}

fn price_chart() -> (LoadedTask, Difficulty) {
    let p = page("shop-vlogging.html", 23, 15, SiteStyle::Generic, "https://shop.example/vlogging", false);
    let mut s = Script::default();
    s.workspace("Vlogging camera prices").on_page(&p).table("Items", "Items", &[("Title", ValueType::Text), ("Price", ValueType::Text)]);
    s.capture(&p, "Items", &[("Title", TITLE), ("Price", PRICE)], 2).apply(RuleId::BatchExtraction);
    s.chat(
        "Show the price of each camera in @Items as a bar chart",
        "I'll make the prices numeric and chart them by title.",
        vec![
            step("convertColumnType", json!({"instanceId": "Items", "columnName": "Price", "targetType": "number"})),
            step("createVisualization", json!({"sourceInstanceId": "Items", "chartType": "bar", "xAxis": "Title", "yAxis": "Price"})),
        ],
    );
    let c = Criteria { needs_viz: true, ..NONE };
    task("vlogging-price-chart", "Chart the price of every vlogging camera on the page.", c, vec![p], s)
}

fn value_score() -> (LoadedTask, Difficulty) {
    let p = page("amazon-travel.html", 24, 20, SiteStyle::AmazonLike, "https://www.amazon.example/s?k=travel+camera", false);
    let fields = [("Title", TITLE), ("Price", PRICE), ("User Rating", RATING), ("Resolution", RESOLUTION)];
    let cols: Vec<(&str, ValueType)> = fields.iter().map(|(n, _)| (*n, ValueType::Text)).collect();
    let mut s = Script::default();
    s.workspace("Best value travel camera").on_page(&p).table("Cameras", "Cameras", &cols);
    s.capture(&p, "Cameras", &fields, 2).apply(RuleId::BatchExtraction);
    s.in_editor("Cameras");
    s.tool("convertColumnType", json!({"instanceId": "Cameras", "columnName": "Price", "targetType": "number"}));
    s.tool("searchAndReplace", json!({"instanceId": "Cameras", "searchPattern": " out of 5 stars", "replaceWith": "", "columnName": "User Rating"}));
    s.tool("convertColumnType", json!({"instanceId": "Cameras", "columnName": "User Rating", "targetType": "number"}));
    s.tool("convertColumnType", json!({"instanceId": "Cameras", "columnName": "Resolution", "targetType": "number", "cleaningPattern": " MP"}));
    s.tool("addComputedColumn", json!({"instanceId": "Cameras", "formula": "[User Rating] / [Price] * 1000", "newColumnName": "Rating per $1000"}));
    s.tool_with(
        "tableSort",
        json!({"instanceId": "Cameras", "columnName": "Rating per $1000", "order": "desc"}),
        EventKind::SortApplied { instance_id: "Cameras".into(), column: "Rating per $1000".into(), order: SortOrder::Desc },
    );
    let c = Criteria { transform_ops_gt_5: true, ..NONE };
    task("travel-camera-value", "Rank the travel cameras on the page by user rating per $1000 of price.", c, vec![p], s)
}

fn two_shops_chart() -> (LoadedTask, Difficulty) {
    let a = page("shop-compact.html", 25, 11, SiteStyle::Generic, "https://shop.example/compact", false);
    let b = page("ebay-compact.html", 26, 13, SiteStyle::EbayLike, "https://www.ebay.example/sch/compact", false);
    let cols = [("Title", ValueType::Text), ("Price", ValueType::Text)];
    let mut s = Script::default();
    s.workspace("Compact camera prices").on_page(&a).table("Table1", "Shop compact", &cols);
    s.capture(&a, "Table1", &[("Title", TITLE), ("Price", PRICE)], 2).apply(RuleId::BatchExtraction);
    s.on_page(&b).table("Table2", "eBay compact", &cols);
    s.capture(&b, "Table2", &[("Title", TITLE), ("Price", PRICE)], 2).apply(RuleId::BatchExtraction);
    s.idle().apply(RuleId::JoiningTables);
    s.chat(
        "Plot the distribution of prices in @Merged1",
        "I'll read the prices as numbers and draw a histogram.",
        vec![
            step("convertColumnType", json!({"instanceId": "Merged1", "columnName": "Price", "targetType": "number", "cleaningPattern": " USD"})),
            step("createVisualization", json!({"sourceInstanceId": "Merged1", "chartType": "histogram", "xAxis": "Price"})),
        ],
    );
    let c = Criteria { multi_page: true, needs_viz: true, ..NONE };
    task("compact-price-spread", "Show how compact camera prices are spread across both shops.", c, vec![a, b], s)
}

/// Buying a camera: page suggestions, two captures and a batch extraction
/// per shop, chat for extra columns, the suggested join, and a scatter plot
/// of the merged table.
pub fn camera_scenario() -> (LoadedTask, Difficulty) {
    let a = page("amazon-mirrorless.html", 501, 12, SiteStyle::AmazonLike, AMAZON_CAMERAS, false);
    let b = page("ebay-mirrorless.html", 502, 10, SiteStyle::EbayLike, EBAY_CAMERAS, false);
    let cols = [("Image", ValueType::ImageRef), ("Title", ValueType::Text), ("Price", ValueType::Text)];
    let fields = [("Image", IMAGE), ("Title", TITLE), ("Price", PRICE)];
    let add_columns = |table: &str, page: &Page| {
        let mut plan = vec![step(
            "extractBatch",
            json!({"pageUrl": page.url(), "mode": "addColumns", "instanceId": table,
                   "fields": [{"name": "User Rating", "css": RATING}, {"name": "Resolution", "css": RESOLUTION}]}),
        )];
        let mut convert = json!({"instanceId": table, "columnName": "User Rating", "targetType": "number"});
        if page.style == SiteStyle::AmazonLike {
            convert["cleaningPattern"] = json!(" out of 5 stars");
        }
        plan.push(step("convertColumnType", convert));
        plan
    };

    let mut s = Script::default();
    s.workspace("Buying a camera").idle().apply(RuleId::WebpageSuggestion);
    s.on_page(&a).table("Table1", "Table1", &cols);
    s.capture(&a, "Table1", &fields, 2).apply(RuleId::BatchExtraction);
    s.chat("Add columns of the user ratings and resolution to @Table1", "I'll pull both fields for every row.", add_columns("Table1", &a));
    s.on_page(&b).table("Table2", "Table2", &cols);
    s.capture(&b, "Table2", &fields, 2).apply(RuleId::BatchExtraction);
    s.chat("Add columns of the user ratings and resolution to @Table2", "I'll pull both fields for every row.", add_columns("Table2", &b));
    s.idle().apply(RuleId::JoiningTables);
    s.tool("updateInstance", json!({"instanceId": "Merged1", "newName": "Combined_Camera_Data"}));
    s.chat(
        "Create a visualization using @Combined_Camera_Data",
        "Here is a scatter plot of price against user rating, colored by resolution.",
        vec![
            step("convertColumnType", json!({"instanceId": "Merged1", "columnName": "Price", "targetType": "number", "cleaningPattern": " USD"})),
            step(
                "createVisualization",
                json!({"sourceInstanceId": "Merged1", "chartType": "scatter", "xAxis": "Price", "yAxis": "User Rating", "color": "Resolution"}),
            ),
        ],
    );
    s.push(DriverStep::Trace { instance: "Merged1".into(), row: 12, column: "Title".into() });
    let c = Criteria { multi_page: true, transform_ops_gt_5: true, needs_viz: true };
    task(CAMERA_TASK, "Find a mirrorless camera with a good price, rating and resolution across two shops.", c, vec![a, b], s)
}

fn three_shops() -> (LoadedTask, Difficulty) {
    let pages = [
        page("shop-flagship.html", 31, 12, SiteStyle::Generic, "https://shop.example/flagship", false),
        page("amazon-flagship.html", 32, 16, SiteStyle::AmazonLike, "https://www.amazon.example/s?k=flagship+camera", false),
        page("ebay-flagship.html", 33, 21, SiteStyle::EbayLike, "https://www.ebay.example/sch/flagship", false),
    ];
    let cols = [("Title", ValueType::Text), ("Price", ValueType::Text), ("Resolution", ValueType::Text)];
    let fields = [("Title", TITLE), ("Price", PRICE), ("Resolution", RESOLUTION)];
    let mut s = Script::default();
    s.workspace("Flagship cameras");
    for (p, id) in pages.iter().zip(["A", "B", "C"]) {
        s.on_page(p).table(id, id, &cols);
        s.capture(p, id, &fields, 2).apply(RuleId::BatchExtraction);
    }
    let format = |id: &str| step("formatColumn", json!({"instanceId": id, "oldColumnName": "Price", "formatPattern": "currency"}));
    s.chat(
        "Combine @A, @B and @C into one table",
        "I'll write all prices the same way and stack the three tables.",
        vec![
            format("A"),
            format("B"),
            format("C"),
            step("mergeInstances", json!({"sourceInstanceIds": ["A", "B", "C"], "mergeStrategy": "union", "newInstanceName": "All Flagships"})),
        ],
    );
    s.chat(
        "Compare price and resolution in @All_Flagships",
        "I'll make both columns numeric and plot one against the other.",
        vec![
            step("convertColumnType", json!({"instanceId": "All_Flagships", "columnName": "Price", "targetType": "number", "cleaningPattern": " USD"})),
            step("convertColumnType", json!({"instanceId": "All_Flagships", "columnName": "Resolution", "targetType": "number", "cleaningPattern": " MP"})),
            step("createVisualization", json!({"sourceInstanceId": "All_Flagships", "chartType": "scatter", "xAxis": "Resolution", "yAxis": "Price"})),
        ],
    );
    s.in_editor("All_Flagships");
    s.tool_with(
        "tableSort",
        json!({"instanceId": "All_Flagships", "columnName": "Price", "order": "asc"}),
        EventKind::SortApplied { instance_id: "All_Flagships".into(), column: "Price".into(), order: SortOrder::Asc },
    );
    let c = Criteria { multi_page: true, transform_ops_gt_5: true, needs_viz: true };
    task("flagship-three-shops", "Compare flagship camera prices against resolution across three shops.", c, pages.into_iter().collect(), s)
}

/// The ten bundled tasks with their authored difficulty.
pub fn bundled_tasks() -> Vec<(LoadedTask, Difficulty)> {
    vec![
        extract_twenty(),
        sort_by_price(),
        rated_listings(),
        brand_column(),
        two_shops(),
        price_chart(),
        value_score(),
        two_shops_chart(),
        camera_scenario(),
        three_shops(),
    ]
}

/// Writes the bundled benchmark under `dir`.
pub fn write_benchmark(dir: &Path) -> Result<BenchmarkManifest, TaskError> {
    let io = |e: std::io::Error| TaskError::Io(format!("{}: {e}", dir.display()));
    let pages_dir = dir.join("pages");
    let tasks_dir = dir.join("tasks");
    std::fs::create_dir_all(&pages_dir).map_err(io)?;
    std::fs::create_dir_all(&tasks_dir).map_err(io)?;
    let mut manifest = BenchmarkManifest::default();
    let mut pages = SnapshotManifest { pages: Vec::new() };
    for (t, difficulty) in bundled_tasks() {
        for p in &t.pages {
            let file = p.file.trim_start_matches("../pages/").to_string();
            std::fs::write(pages_dir.join(&file), &p.html).map_err(io)?;
            if !pages.pages.iter().any(|e| e.file == file) {
                pages.pages.push(ManifestEntry { file, url: p.url.clone() });
            }
        }
        let text = serde_json::to_string_pretty(&t.task).map_err(|e| TaskError::Io(e.to_string()))?;
        std::fs::write(tasks_dir.join(format!("{}.json", t.task.id)), text + "\n").map_err(io)?;
        manifest.tasks.push(ManifestTask { id: t.task.id.clone(), file: format!("tasks/{}.json", t.task.id), difficulty });
    }
    let text = serde_json::to_string_pretty(&pages).map_err(|e| TaskError::Io(e.to_string()))?;
    std::fs::write(pages_dir.join(MANIFEST_FILE), text + "\n").map_err(io)?;
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| TaskError::Io(e.to_string()))?;
    std::fs::write(dir.join(BENCHMARK_MANIFEST), text + "\n").map_err(io)?;
    Ok(manifest)
}
