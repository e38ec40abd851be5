//! Seed-file construction from a saved copy of a controversial-issues list page.

use std::collections::HashSet;

use scraper::{ElementRef, Html};
use url::Url;

use super::html::{classify_heading, resolve_link};
use super::{Polarity, SeedEntry};

fn text_of(el: ElementRef<'_>) -> String {
    el.text()
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Every article linked from a list item becomes a controversial seed tagged
/// with the enclosing `h2` section heading. Links to other hosts, non-article
/// namespaces and the page's own reference sections are ignored.
pub fn parse_seed_list(base: &Url, html: &str) -> Vec<SeedEntry> {
    let doc = Html::parse_document(html);
    let mut topic: Option<String> = None;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for node in doc.tree.root().descendants() {
        let Some(el) = ElementRef::wrap(node) else { continue };
        match el.value().name() {
            "h2" => {
                let heading = text_of(el);
                let heading = heading.trim_end_matches("[edit]").trim().to_string();
                topic = if classify_heading(&heading).is_some() || heading.eq_ignore_ascii_case("contents") {
                    None
                } else {
                    Some(heading)
                };
            }
            "a" => {
                let Some(section) = &topic else { continue };
                let in_item = el
                    .ancestors()
                    .filter_map(ElementRef::wrap)
                    .any(|a| a.value().name() == "li");
                if !in_item {
                    continue;
                }
                let Some(url) = el.value().attr("href").and_then(|h| resolve_link(base, h)) else {
                    continue;
                };
                let Some(title) = url.path().strip_prefix("/wiki/") else {
                    continue;
                };
                if url.host_str() != base.host_str()
                    || url.port() != base.port()
                    || title.contains(':')
                    || title.is_empty()
                {
                    continue;
                }
                if seen.insert(url.to_string()) {
                    out.push(SeedEntry {
                        url: url.to_string(),
                        topic: Some(section.clone()),
                        polarity: Polarity::Controversial,
                    });
                }
            }
            _ => {}
        }
    }
    out
}
