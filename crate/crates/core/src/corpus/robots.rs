//! Minimal robots exclusion parser (user-agent groups, Allow/Disallow with
//! `*` and `$` patterns, longest match wins, Allow wins ties).

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RobotsRules {
    rules: Vec<(bool, String)>,
}

impl RobotsRules {
    pub fn allow_all() -> Self {
        RobotsRules::default()
    }

    pub fn parse(body: &str, user_agent: &str) -> Self {
        let agent = user_agent.to_lowercase();
        let mut specific: Option<Vec<(bool, String)>> = None;
        let mut wildcard: Option<Vec<(bool, String)>> = None;
        let mut group_agents: Vec<String> = Vec::new();
        let mut group_rules: Vec<(bool, String)> = Vec::new();
        let mut in_rules = false;

        let mut flush = |agents: &mut Vec<String>, rules: &mut Vec<(bool, String)>| {
            for a in agents.iter() {
                if a == "*" {
                    wildcard.get_or_insert_with(Vec::new).extend(rules.iter().cloned());
                } else if agent.contains(a.as_str()) {
                    specific.get_or_insert_with(Vec::new).extend(rules.iter().cloned());
                }
            }
            agents.clear();
            rules.clear();
        };

        for raw in body.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let Some((key, value)) = line.split_once(':') else {
                continue;
            };
            let key = key.trim().to_lowercase();
            let value = value.trim();
            match key.as_str() {
                "user-agent" => {
                    if in_rules {
                        flush(&mut group_agents, &mut group_rules);
                        in_rules = false;
                    }
                    group_agents.push(value.to_lowercase());
                }
                "allow" | "disallow" => {
                    in_rules = true;
                    if !value.is_empty() {
                        group_rules.push((key == "allow", value.to_string()));
                    }
                }
                _ => {}
            }
        }
        flush(&mut group_agents, &mut group_rules);
        RobotsRules {
            rules: specific.or(wildcard).unwrap_or_default(),
        }
    }

    /// `path` includes the query string, if any.
    pub fn is_allowed(&self, path: &str) -> bool {
        let mut best: Option<(usize, bool)> = None;
        for (allow, pattern) in &self.rules {
            if pattern_matches(pattern, path) {
                let len = pattern.len();
                best = match best {
                    Some((l, a)) if l > len || (l == len && a) => Some((l, a)),
                    _ => Some((len, *allow)),
                };
            }
        }
        best.is_none_or(|(_, allow)| allow)
    }
}

fn pattern_matches(pattern: &str, path: &str) -> bool {
    let (pattern, anchored) = match pattern.strip_suffix('$') {
        Some(p) => (p, true),
        None => (pattern, false),
    };
    let parts: Vec<&str> = pattern.split('*').collect();
    let mut pos = 0;
    for (i, part) in parts.iter().enumerate() {
        if i == 0 {
            if !path.starts_with(part) {
                return false;
            }
            pos = part.len();
        } else if i == parts.len() - 1 && anchored {
            return path.len() >= pos + part.len() && path.ends_with(part);
        } else {
            match path[pos..].find(part) {
                Some(off) => pos += off + part.len(),
                None => return false,
            }
        }
    }
    !anchored || pos == path.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_and_precedence() {
        let body = "User-agent: *\nDisallow: /private\nAllow: /private/ok\n\nUser-agent: otherbot\nDisallow: /\n";
        let r = RobotsRules::parse(body, "controversy-crawler/0.1");
        assert!(r.is_allowed("/wiki/A"));
        assert!(!r.is_allowed("/private/x"));
        assert!(r.is_allowed("/private/ok/y"));
        let other = RobotsRules::parse(body, "OtherBot");
        assert!(!other.is_allowed("/wiki/A"));
    }

    #[test]
    fn wildcards() {
        let r = RobotsRules::parse("User-agent: *\nDisallow: /*.pdf$\nDisallow: /w/*action=edit\n", "x");
        assert!(!r.is_allowed("/files/a.pdf"));
        assert!(r.is_allowed("/files/a.pdf?x=1"));
        assert!(!r.is_allowed("/w/index.php?title=A&action=edit"));
        assert!(r.is_allowed("/w/index.php?title=A"));
    }

    #[test]
    fn empty_disallow_allows_everything() {
        let r = RobotsRules::parse("User-agent: *\nDisallow:\n", "x");
        assert!(r.is_allowed("/anything"));
    }
}
