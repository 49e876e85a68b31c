//! Deterministic list-page generator for benchmark snapshots.
//!
//! Pages carry `n` product records plus distractors (navigation lists, a
//! filter sidebar and sponsored cards with a different class list) so that a
//! correct selector must recover exactly the `n` records.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SiteStyle {
    Generic,
    AmazonLike,
    EbayLike,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub title: String,
    pub price: f64,
    pub price_text: String,
    pub rating: Option<f64>,
    pub rating_text: Option<String>,
    pub resolution: String,
    pub image: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedPage {
    pub url: String,
    pub html: String,
    pub records: Vec<Record>,
}

const BRANDS: &[&str] = &["Sony", "Canon", "Nikon", "Fujifilm", "Panasonic", "Olympus", "Leica", "Pentax"];
const LINES: &[&str] = &["Alpha", "EOS", "Z", "X-T", "Lumix", "OM", "Q", "K"];
const KINDS: &[&str] = &["Mirrorless Camera", "DSLR Camera", "Compact Camera", "Vlogging Camera"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn format_thousands(n: f64, decimals: usize) -> String {
    let s = format!("{n:.decimals$}");
    let (int, frac) = s.split_once('.').map_or((s.as_str(), None), |(a, b)| (a, Some(b)));
    let mut out = String::new();
    for (i, ch) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    if let Some(f) = frac {
        out.push('.');
        out.push_str(f);
    }
    out
}

fn make_records(rng: &mut ChaCha8Rng, n: usize, style: SiteStyle, missing_rating: bool) -> Vec<Record> {
    let mut titles = std::collections::BTreeSet::new();
    (0..n)
        .map(|i| {
            let title = loop {
                let b = rng.gen_range(0..BRANDS.len());
                let t = format!("{} {} {} {}", BRANDS[b], LINES[b], rng.gen_range(1..99), KINDS[rng.gen_range(0..KINDS.len())]);
                if titles.insert(t.clone()) {
                    break t;
                }
            };
            let cents = if style == SiteStyle::EbayLike { rng.gen_range(0..100) } else { [0, 99, 95][rng.gen_range(0..3)] };
            let price = rng.gen_range(199..3500) as f64 + cents as f64 / 100.0;
            let price_text = match style {
                SiteStyle::AmazonLike => format!("${}", format_thousands(price, 2)),
                SiteStyle::EbayLike => format!("US ${}", format_thousands(price, 2)),
                SiteStyle::Generic => format!("${}", format_thousands(price, 2)),
            };
            let has_rating = !(missing_rating && i % 7 == 3);
            let rating = has_rating.then(|| (rng.gen_range(30..=50) as f64) / 10.0);
            let rating_text = rating.map(|r| match style {
                SiteStyle::AmazonLike => format!("{r:.1} out of 5 stars"),
                _ => format!("{r:.1}"),
            });
            let resolution = format!("{:.1} MP", [12.1, 20.1, 24.2, 26.1, 33.0, 45.7, 61.0][rng.gen_range(0..7)]);
            let image = format!("images/cam-{i:02}.jpg");
            Record { title, price, price_text, rating, rating_text, resolution, image }
        })
        .collect()
}

struct Classes {
    list: (&'static str, &'static str),
    card: &'static str,
    body: &'static str,
    image: &'static str,
    title: &'static str,
    price: &'static str,
    rating: &'static str,
    resolution: &'static str,
    ad: &'static str,
}

fn classes(style: SiteStyle) -> Classes {
    match style {
        SiteStyle::Generic => Classes {
            list: ("ul", "results"),
            card: "product-card",
            body: "card-body",
            image: "image",
            title: "title",
            price: "price",
            rating: "user-rating",
            resolution: "resolution",
            ad: "product-card sponsored",
        },
        SiteStyle::AmazonLike => Classes {
            list: ("div", "s-search-results"),
            card: "s-result-item",
            body: "a-section",
            image: "s-image image",
            title: "a-size-medium title",
            price: "a-price price",
            rating: "a-icon-alt user-rating",
            resolution: "a-spec resolution",
            ad: "s-result-item AdHolder",
        },
        SiteStyle::EbayLike => Classes {
            list: ("ul", "srp-results"),
            card: "s-item",
            body: "s-item__info",
            image: "s-item__image image",
            title: "s-item__title title",
            price: "s-item__price price",
            rating: "s-item__reviews user-rating",
            resolution: "s-item__detail resolution",
            ad: "s-item s-item--promoted",
        },
    }
}

fn card_html(c: &Classes, r: &Record, class: &str, item_tag: &str) -> String {
    let rating = r
        .rating_text
        .as_ref()
        .map(|t| format!("<span class=\"{}\">{}</span>", c.rating, escape(t)))
        .unwrap_or_default();
    format!(
        "<{item_tag} class=\"{class}\"><img class=\"{}\" src=\"{}\" alt=\"{}\">\n  <div class=\"{}\"><h2 class=\"{}\">{}</h2>\n    \
         <span class=\"{}\">{}</span>{rating}<span class=\"{}\">{}</span></div></{item_tag}>\n",
        c.image,
        escape(&r.image),
        escape(&r.title),
        c.body,
        c.title,
        escape(&r.title),
        c.price,
        escape(&r.price_text),
        c.resolution,
        escape(&r.resolution),
    )
}

/// Generates a list page with `n` records. The same seed always yields the
/// same page. Every seventh record lacks a rating when `missing_rating`.
pub fn generate_list_page(seed: u64, n: usize, style: SiteStyle, url: &str, missing_rating: bool) -> GeneratedPage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = make_records(&mut rng, n, style, missing_rating);
    let c = classes(style);
    let item_tag = if c.list.0 == "ul" { "li" } else { "div" };

    let mut nav: Vec<&str> = vec!["Home", "Deals", "Cameras", "Lenses", "Accessories", "Help"];
    nav.truncate(rng.gen_range(3..=6));
    let nav_html: String = nav.iter().map(|n| format!("<li class=\"nav-item\"><a href=\"#\">{n}</a></li>")).collect();
    let mut filters = vec!["Under $500", "$500 to $1,000", "$1,000 to $2,000", "Over $2,000", "4 stars & up"];
    filters.shuffle(&mut rng);
    filters.truncate(rng.gen_range(2..=5));
    let filter_html: String = filters.iter().map(|f| format!("<li class=\"filter\"><label>{}</label></li>", escape(f))).collect();

    let ads = rng.gen_range(1..=3);
    let mut ad_slots: Vec<usize> = (0..ads).map(|_| rng.gen_range(0..=n)).collect();
    ad_slots.sort_unstable();
    let ad_records = make_records(&mut rng, ads, style, false);

    let mut body = String::new();
    let mut ad_iter = ad_slots.iter().zip(&ad_records).peekable();
    for (i, r) in records.iter().enumerate() {
        while let Some((_, ad)) = ad_iter.next_if(|(slot, _)| **slot == i) {
            body.push_str(&card_html(&c, ad, c.ad, item_tag));
        }
        body.push_str(&card_html(&c, r, c.card, item_tag));
    }
    for (_, ad) in ad_iter {
        body.push_str(&card_html(&c, ad, c.ad, item_tag));
    }

    let html = format!(
        "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>Camera results</title></head>\n<body>\n\
         <header class=\"top\"><ul class=\"nav\">{nav_html}</ul></header>\n\
         <aside class=\"sidebar\"><h3 class=\"filters-title\">Filter by</h3><ul class=\"filters\">{filter_html}</ul></aside>\n\
         <main class=\"main\"><h1 class=\"heading\">{n} results for cameras</h1>\n<{tag} class=\"{list}\">\n{body}</{tag}>\n</main>\n\
         <footer class=\"footer\"><p>Prices shown are examples.</p></footer>\n</body>\n</html>\n",
        tag = c.list.0,
        list = c.list.1,
    );
    GeneratedPage { url: url.to_string(), html, records }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = generate_list_page(7, 15, SiteStyle::Generic, "http://x/", true);
        let b = generate_list_page(7, 15, SiteStyle::Generic, "http://x/", true);
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 15);
        assert!(a.records.iter().any(|r| r.rating.is_none()));
    }

    #[test]
    fn thousands() {
        assert_eq!(format_thousands(1299.0, 2), "1,299.00");
        assert_eq!(format_thousands(999.5, 2), "999.50");
        assert_eq!(format_thousands(1234567.0, 0), "1,234,567");
    }
}
