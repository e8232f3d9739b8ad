//! Rule-based English lemmatizer: an exception table for irregular forms,
//! then suffix rules for `-ies`, `-es`, `-s`, `-ied`, `-ed` and `-ing` with
//! consonant undoubling and final-`e` restoration.

use std::collections::HashMap;
use std::sync::OnceLock;

const EXCEPTIONS: &[(&str, &str)] = &[
    // be / have / do
    ("am", "be"),
    ("is", "be"),
    ("are", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("being", "be"),
    ("has", "have"),
    ("had", "have"),
    ("having", "have"),
    ("does", "do"),
    ("did", "do"),
    ("done", "do"),
    // irregular verbs
    ("went", "go"),
    ("gone", "go"),
    ("goes", "go"),
    ("said", "say"),
    ("says", "say"),
    ("made", "make"),
    ("took", "take"),
    ("taken", "take"),
    ("came", "come"),
    ("saw", "see"),
    ("seen", "see"),
    ("got", "get"),
    ("gotten", "get"),
    ("gave", "give"),
    ("given", "give"),
    ("knew", "know"),
    ("known", "know"),
    ("thought", "think"),
    ("told", "tell"),
    ("found", "find"),
    ("left", "leave"),
    ("felt", "feel"),
    ("began", "begin"),
    ("begun", "begin"),
    ("brought", "bring"),
    ("bought", "buy"),
    ("kept", "keep"),
    ("held", "hold"),
    ("stood", "stand"),
    ("wrote", "write"),
    ("written", "write"),
    ("spoke", "speak"),
    ("spoken", "speak"),
    ("became", "become"),
    ("fought", "fight"),
    ("sought", "seek"),
    ("won", "win"),
    ("lost", "lose"),
    ("paid", "pay"),
    ("met", "meet"),
    ("led", "lead"),
    ("sent", "send"),
    ("built", "build"),
    ("spent", "spend"),
    ("fell", "fall"),
    ("fallen", "fall"),
    ("chose", "choose"),
    ("chosen", "choose"),
    ("drove", "drive"),
    ("driven", "drive"),
    ("ate", "eat"),
    ("eaten", "eat"),
    ("grew", "grow"),
    ("grown", "grow"),
    ("threw", "throw"),
    ("thrown", "throw"),
    ("broke", "break"),
    ("broken", "break"),
    ("hid", "hide"),
    ("hidden", "hide"),
    ("rose", "rise"),
    ("risen", "rise"),
    ("sat", "sit"),
    ("caught", "catch"),
    ("taught", "teach"),
    ("meant", "mean"),
    ("heard", "hear"),
    ("understood", "understand"),
    ("ran", "run"),
    ("shot", "shoot"),
    ("struck", "strike"),
    ("forgot", "forget"),
    ("forgotten", "forget"),
    ("forgave", "forgive"),
    ("forgiven", "forgive"),
    ("wore", "wear"),
    ("worn", "wear"),
    ("lay", "lie"),
    ("laid", "lay"),
    ("slept", "sleep"),
    ("fed", "feed"),
    ("fled", "flee"),
    ("bore", "bear"),
    ("born", "bear"),
    ("beaten", "beat"),
    ("swore", "swear"),
    ("sworn", "swear"),
    ("stole", "steal"),
    ("stolen", "steal"),
    ("sold", "sell"),
    ("dealt", "deal"),
    ("sang", "sing"),
    ("sung", "sing"),
    ("rang", "ring"),
    ("drew", "draw"),
    ("drawn", "draw"),
    ("flew", "fly"),
    ("flown", "fly"),
    ("knelt", "kneel"),
    // irregular nouns
    ("men", "man"),
    ("women", "woman"),
    ("children", "child"),
    ("mice", "mouse"),
    ("lice", "louse"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("geese", "goose"),
    ("lives", "life"),
    ("wives", "wife"),
    ("knives", "knife"),
    ("leaves", "leaf"),
    ("halves", "half"),
    ("selves", "self"),
    ("thieves", "thief"),
    ("wolves", "wolf"),
    ("criteria", "criterion"),
    ("phenomena", "phenomenon"),
    // words the suffix rules would damage
    ("news", "news"),
    ("series", "series"),
    ("species", "species"),
    ("always", "always"),
    ("perhaps", "perhaps"),
    ("sometimes", "sometimes"),
    ("nevertheless", "nevertheless"),
    ("during", "during"),
    ("nothing", "nothing"),
    ("something", "something"),
    ("anything", "anything"),
    ("everything", "everything"),
    ("morning", "morning"),
    ("evening", "evening"),
    ("ceiling", "ceiling"),
    ("wedding", "wedding"),
    ("ring", "ring"),
    ("thing", "thing"),
    ("things", "thing"),
    ("added", "add"),
    ("adding", "add"),
    ("created", "create"),
    ("creating", "create"),
    ("focused", "focus"),
    ("focusing", "focus"),
    ("biased", "bias"),
    ("united", "unite"),
    ("dying", "die"),
    ("lying", "lie"),
    ("tying", "tie"),
    ("freed", "free"),
    ("hundred", "hundred"),
    ("sacred", "sacred"),
    ("naked", "naked"),
    ("wicked", "wicked"),
    ("hatred", "hatred"),
    ("kindred", "kindred"),
    ("sibling", "sibling"),
    ("darling", "darling"),
    ("movies", "movie"),
    ("cookies", "cookie"),
    ("bias", "bias"),
    ("atlas", "atlas"),
    ("canvas", "canvas"),
    ("texas", "texas"),
    ("christmas", "christmas"),
    ("alias", "alias"),
    ("ethics", "ethics"),
    ("physics", "physics"),
    ("people", "people"),
    ("politics", "politics"),
    ("economics", "economics"),
];

fn exceptions() -> &'static HashMap<&'static str, &'static str> {
    static TABLE: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    TABLE.get_or_init(|| EXCEPTIONS.iter().copied().collect())
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

fn has_vowel(s: &[u8]) -> bool {
    s.iter().any(|&c| is_vowel(c) || c == b'y')
}

/// Number of vowel-consonant sequences, as in Porter's measure.
fn measure(s: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for (i, &c) in s.iter().enumerate() {
        let v = is_vowel(c) || (c == b'y' && i > 0 && !is_vowel(s[i - 1]));
        if prev_vowel && !v {
            m += 1;
        }
        prev_vowel = v;
    }
    m
}

/// Consonant-vowel-consonant ending where the last consonant is not w, x or y.
fn ends_cvc(s: &[u8]) -> bool {
    let n = s.len();
    if n < 3 {
        return false;
    }
    let (a, b, c) = (s[n - 3], s[n - 2], s[n - 1]);
    !is_vowel(a) && is_vowel(b) && !is_vowel(c) && !matches!(c, b'w' | b'x' | b'y')
}

/// Repairs a stem after removing `-ed` or `-ing`.
fn restore(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    let last = b[n - 1];
    let prev = b[n - 2];
    if last == prev && !is_vowel(last) {
        // stopp -> stop, runn -> run; call, pass, buzz, stuff stay
        return if matches!(last, b'l' | b's' | b'z' | b'f') {
            stem.to_string()
        } else {
            stem[..n - 1].to_string()
        };
    }
    let prev2 = if n >= 3 { Some(b[n - 3]) } else { None };
    let single_vowel = is_vowel(prev) && prev2.is_none_or(|c| !is_vowel(c));
    let needs_e = match last {
        b'v' | b'u' | b'c' | b's' | b'z' => true,
        b'g' => !(prev == b'n' && matches!(prev2, Some(b'o') | Some(b'i') | None)),
        b'l' => !is_vowel(prev) && !matches!(prev, b'r' | b'w'),
        b'r' => matches!(prev, b'i' | b'u') && (single_vowel || stem.ends_with("uir")),
        b'd' => single_vowel,
        b't' => single_vowel && matches!(prev, b'a' | b'u' | b'o'),
        b'm' => single_vowel && prev == b'u',
        b'n' => single_vowel && prev == b'i',
        b'b' | b'k' => single_vowel && matches!(prev, b'i' | b'o'),
        _ => false,
    };
    if needs_e || (measure(b) == 1 && ends_cvc(b)) {
        format!("{stem}e")
    } else {
        stem.to_string()
    }
}

/// Lemmatizes a lowercase token. Tokens no rule applies to are returned
/// unchanged.
pub fn lemmatize(token: &str) -> String {
    if let Some(lemma) = exceptions().get(token) {
        return (*lemma).to_string();
    }
    if !token.is_ascii() || token.len() <= 3 {
        return token.to_string();
    }

    if let Some(stem) = token.strip_suffix("ies") {
        return if token.len() <= 4 {
            format!("{stem}ie")
        } else {
            format!("{stem}y")
        };
    }
    if let Some(stem) = token.strip_suffix("ied") {
        return if token.len() <= 4 {
            format!("{stem}ie")
        } else {
            format!("{stem}y")
        };
    }
    if let Some(stem) = token.strip_suffix("es") {
        if stem.ends_with("ss")
            || stem.ends_with("sh")
            || stem.ends_with("ch")
            || stem.ends_with('x')
            || stem.ends_with("zz")
            || (stem.ends_with('o') && token.len() > 5)
        {
            return stem.to_string();
        }
        return token[..token.len() - 1].to_string();
    }
    if let Some(stem) = token.strip_suffix('s') {
        if token.ends_with("ss")
            || token.ends_with("us")
            || token.ends_with("is")
            || token.ends_with("ous")
        {
            return token.to_string();
        }
        return stem.to_string();
    }
    if token.ends_with("eed") {
        return if token.len() <= 5 {
            token.to_string()
        } else {
            token[..token.len() - 1].to_string()
        };
    }
    if let Some(stem) = token.strip_suffix("ed") {
        if stem.len() >= 2 && has_vowel(stem.as_bytes()) {
            return restore(stem);
        }
        return token.to_string();
    }
    if let Some(stem) = token.strip_suffix("ing") {
        if stem.len() >= 2 && has_vowel(stem.as_bytes()) {
            return restore(stem);
        }
        return token.to_string();
    }
    token.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_rules() {
        assert_eq!(lemmatize("families"), "family");
        assert_eq!(lemmatize("gay"), "gay");
        assert_eq!(lemmatize("running"), "run");
        assert_eq!(lemmatize("gays"), "gay");
        assert_eq!(lemmatize("praised"), "praise");
        assert_eq!(lemmatize("developed"), "develop");
    }

    #[test]
    fn short_words_untouched() {
        for w in ["is", "bed", "red", "gas", "us", "yes", "his"] {
            assert_eq!(lemmatize(w), exceptions().get(w).copied().unwrap_or(w));
        }
    }
}
