//! Page parsing: visible text and section-classified links.

use scraper::{ElementRef, Html, Node};
use url::Url;

use super::LinkClass;

const SKIPPED: &[&str] = &["script", "style", "nav", "noscript", "template"];
const TEXT_BLOCKS: &[&str] = &["p", "h1", "h2", "h3", "h4", "h5", "h6"];

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedPage {
    pub title: String,
    pub text: String,
    /// Links found under a "See also", "References" or "External links"
    /// section, resolved to absolute URLs without fragments, in page order.
    pub links: Vec<(LinkClass, Url)>,
    /// Set when the HTML parser had to recover from errors.
    pub malformed: bool,
}

/// Maps an `h2` heading to the link class of the section it opens.
pub fn classify_heading(heading: &str) -> Option<LinkClass> {
    let norm: String = heading
        .trim()
        .trim_end_matches("[edit]")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    match norm.as_str() {
        "see also" => Some(LinkClass::SeeAlso),
        "references" | "notes" | "citations" | "sources" | "notes and references" | "footnotes" => {
            Some(LinkClass::References)
        }
        "external links" => Some(LinkClass::ExternalLinks),
        _ => None,
    }
}

fn element_text(el: ElementRef<'_>) -> String {
    let mut out = String::new();
    for node in el.descendants() {
        if let Node::Text(t) = node.value() {
            let skipped = node
                .ancestors()
                .filter_map(ElementRef::wrap)
                .take_while(|a| a.id() != el.id())
                .any(|a| SKIPPED.contains(&a.value().name()));
            if !skipped {
                out.push_str(t);
            }
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn inside(el: ElementRef<'_>, names: &[&str]) -> bool {
    el.ancestors()
        .filter_map(ElementRef::wrap)
        .any(|a| names.contains(&a.value().name()))
}

/// Resolves an `href` against the page URL, keeping http(s) targets only and
/// dropping fragments. Same-page anchors yield `None`.
pub fn resolve_link(base: &Url, href: &str) -> Option<Url> {
    let href = href.trim();
    if href.is_empty() || href.starts_with('#') {
        return None;
    }
    let mut url = base.join(href).ok()?;
    if url.scheme() != "http" && url.scheme() != "https" {
        return None;
    }
    url.set_fragment(None);
    Some(url)
}

pub fn parse_page(base: &Url, html: &str) -> ParsedPage {
    let doc = Html::parse_document(html);
    let mut title = String::new();
    let mut blocks = Vec::new();
    let mut links = Vec::new();
    let mut section: Option<LinkClass> = None;

    for node in doc.tree.root().descendants() {
        let Some(el) = ElementRef::wrap(node) else { continue };
        let name = el.value().name();
        if inside(el, SKIPPED) || SKIPPED.contains(&name) {
            continue;
        }
        match name {
            "title" if title.is_empty() => title = element_text(el),
            "h2" => section = classify_heading(&element_text(el)),
            "h1" if title.is_empty() => title = element_text(el),
            "a" => {
                if let (Some(class), Some(href)) = (section, el.value().attr("href")) {
                    if let Some(url) = resolve_link(base, href) {
                        if !links.iter().any(|(c, u)| *c == class && *u == url) {
                            links.push((class, url));
                        }
                    }
                }
            }
            _ => {}
        }
        if TEXT_BLOCKS.contains(&name) && !inside(el, TEXT_BLOCKS) {
            let t = element_text(el);
            if !t.is_empty() {
                blocks.push(t);
            }
        }
    }
    ParsedPage {
        title,
        text: blocks.join("\n"),
        links,
        malformed: !doc.errors.is_empty(),
    }
}
