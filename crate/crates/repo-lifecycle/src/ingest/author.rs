/// Identity patterns that mark automation accounts.
///
/// A pattern containing a bracket matches anywhere in the canonical id
/// (`dependabot[bot]`); other patterns must be a suffix of the id's local
/// part, the portion before any `@` (`release-bot@x.com` matches `-bot`,
/// `abbott@x.com` does not).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BotPatterns(Vec<String>);

impl Default for BotPatterns {
    fn default() -> Self {
        BotPatterns(vec!["[bot]".to_string(), "-bot".to_string()])
    }
}

impl BotPatterns {
    pub fn new(patterns: impl IntoIterator<Item = String>) -> BotPatterns {
        BotPatterns(patterns.into_iter().collect())
    }

    /// No patterns: nothing is flagged.
    pub fn none() -> BotPatterns {
        BotPatterns(Vec::new())
    }

    pub fn matches(&self, id: &str) -> bool {
        let local = id.split('@').next().unwrap_or(id);
        self.0.iter().any(|p| {
            if p.contains('[') || p.contains(']') {
                id.contains(p.as_str())
            } else {
                local.ends_with(p.as_str())
            }
        })
    }
}

/// A canonical developer identity with its automation flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalAuthor {
    pub id: String,
    pub is_bot: bool,
}

/// Canonicalize a commit author.
///
/// The lowercased email is the identity when present — emails are stabler
/// than display names across a contributor's commits — falling back to the
/// lowercased, whitespace-collapsed name. Both empty yields the sentinel
/// `"unknown"`.
pub fn canonicalize_author(raw_name: &str, raw_email: &str, bots: &BotPatterns) -> CanonicalAuthor {
    let email = raw_email.trim();
    let id = if !email.is_empty() {
        email.to_lowercase()
    } else {
        let name = raw_name.trim();
        if name.is_empty() {
            "unknown".to_string()
        } else {
            name.split_whitespace()
                .collect::<Vec<_>>()
                .join(" ")
                .to_lowercase()
        }
    };
    let is_bot = bots.matches(&id);
    CanonicalAuthor { id, is_bot }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn email_wins_and_is_lowercased() {
        let a = canonicalize_author("Jane Doe", "JANE@X.COM", &BotPatterns::default());
        assert_eq!(a.id, "jane@x.com");
        assert!(!a.is_bot);
    }

    #[test]
    fn name_fallback_collapses_whitespace() {
        let a = canonicalize_author("  Jane   Q.  Doe ", "", &BotPatterns::default());
        assert_eq!(a.id, "jane q. doe");
    }

    #[test]
    fn both_empty_is_unknown() {
        let a = canonicalize_author("", "  ", &BotPatterns::default());
        assert_eq!(a.id, "unknown");
    }

    #[test]
    fn bracketed_bot_pattern() {
        let a = canonicalize_author("dependabot[bot]", "", &BotPatterns::default());
        assert!(a.is_bot);
        let a = canonicalize_author(
            "",
            "49699333+dependabot[bot]@users.noreply.github.com",
            &BotPatterns::default(),
        );
        assert!(a.is_bot);
    }

    #[test]
    fn suffix_pattern_respects_local_part() {
        let bots = BotPatterns::default();
        assert!(canonicalize_author("", "release-bot@ci.example", &bots).is_bot);
        assert!(!canonicalize_author("", "abbott@example.com", &bots).is_bot);
        assert!(!canonicalize_author("", "human@release-bot.example", &bots).is_bot);
    }

    #[test]
    fn patterns_are_configurable() {
        let none = BotPatterns::none();
        assert!(!canonicalize_author("dependabot[bot]", "", &none).is_bot);
        let custom = BotPatterns::new(["svc-".to_string()]);
        assert!(!canonicalize_author("", "release-bot@x", &custom).is_bot);
    }
}
