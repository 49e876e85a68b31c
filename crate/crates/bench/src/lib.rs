//! Fixtures shared by the engine benchmarks.

use workbench_core::extract::pagegen::{generate_list_page, GeneratedPage, SiteStyle};

/// A generated list page with `n` records.
pub fn list_page(n: usize) -> GeneratedPage {
    generate_list_page(n as u64, n, SiteStyle::Generic, "http://bench.local/list", true)
}
