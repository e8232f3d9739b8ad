//! CoNLL-U reading and subject/verb/object extraction.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use crate::corpus::LabelSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    pub head: usize,
    pub deprel: String,
    pub deps: String,
    pub misc: String,
}

impl Token {
    /// Lowercased lemma, falling back to the form when the lemma is empty.
    pub fn norm_lemma(&self) -> String {
        if self.lemma.is_empty() || self.lemma == "_" {
            self.form.to_lowercase()
        } else {
            self.lemma.to_lowercase()
        }
    }

    fn base_rel(&self) -> &str {
        self.deprel.split(':').next().unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedSentence {
    /// Comment lines without the leading `#`, in file order.
    pub comments: Vec<String>,
    pub sent_id: Option<String>,
    pub paragraph_id: Option<String>,
    pub year: Option<i32>,
    pub tokens: Vec<Token>,
}

impl ParsedSentence {
    pub fn root(&self) -> Option<&Token> {
        self.tokens.iter().find(|t| t.head == 0)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let n = self.tokens.len();
        let roots = self.tokens.iter().filter(|t| t.head == 0).count();
        if roots != 1 {
            return Err(format!("{roots} root tokens"));
        }
        let mut ids: Vec<usize> = self.tokens.iter().map(|t| t.id).collect();
        ids.sort_unstable();
        if ids.iter().enumerate().any(|(i, &id)| id != i + 1) {
            return Err("token ids are not 1..n".into());
        }
        if let Some(t) = self.tokens.iter().find(|t| t.head > n) {
            return Err(format!("token {} has head {} beyond {n}", t.id, t.head));
        }
        Ok(())
    }
}

fn comment_value<'a>(comment: &'a str, key: &str) -> Option<&'a str> {
    let rest = comment.trim().strip_prefix(key)?;
    Some(rest.trim_start().strip_prefix('=')?.trim())
}

/// Streams sentences from CoNLL-U text. Multiword ranges and empty nodes
/// are dropped; sentences without exactly one root are skipped with a
/// warning.
pub struct ConlluReader<R> {
    reader: R,
    line_no: usize,
    done: bool,
    skipped: usize,
}

impl<R: BufRead> ConlluReader<R> {
    pub fn new(reader: R) -> Self {
        ConlluReader {
            reader,
            line_no: 0,
            done: false,
            skipped: 0,
        }
    }

    /// Sentences dropped so far for structural problems.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    fn parse_token(&self, line: &str) -> Result<Option<Token>> {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                self.line_no,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            return Ok(None);
        }
        let int = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(self.line_no, format!("bad {what} {s:?}")))
        };
        Ok(Some(Token {
            id: int(cols[0], "token id")?,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            xpos: cols[4].to_string(),
            feats: cols[5].to_string(),
            head: int(cols[6], "head")?,
            deprel: cols[7].to_string(),
            deps: cols[8].to_string(),
            misc: cols[9].to_string(),
        }))
    }

    fn read_block(&mut self) -> Result<Option<ParsedSentence>> {
        let mut sentence = ParsedSentence::default();
        let mut started = false;
        let mut line = String::new();
        loop {
            line.clear();
            let n = self
                .reader
                .read_line(&mut line)
                .map_err(|e| Error::parse(self.line_no + 1, e.to_string()))?;
            if n == 0 {
                self.done = true;
                return Ok(started.then_some(sentence));
            }
            self.line_no += 1;
            let text = line.trim_end_matches(['\n', '\r']);
            if text.trim().is_empty() {
                if started {
                    return Ok(Some(sentence));
                }
                continue;
            }
            started = true;
            if let Some(c) = text.strip_prefix('#') {
                if let Some(v) = comment_value(c, "sent_id") {
                    sentence.sent_id = Some(v.to_string());
                } else if let Some(v) = comment_value(c, "paragraph_id") {
                    sentence.paragraph_id = Some(v.to_string());
                } else if let Some(v) = comment_value(c, "year") {
                    sentence.year = Some(v.parse().map_err(|_| {
                        Error::parse(self.line_no, format!("bad year {v:?}"))
                    })?);
                }
                sentence.comments.push(c.to_string());
                continue;
            }
            if let Some(t) = self.parse_token(text)? {
                sentence.tokens.push(t);
            }
        }
    }
}

impl<R: BufRead> Iterator for ConlluReader<R> {
    type Item = Result<ParsedSentence>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            match self.read_block() {
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
                Ok(None) => return None,
                Ok(Some(s)) if s.tokens.is_empty() => continue,
                Ok(Some(s)) => match s.validate() {
                    Ok(()) => return Some(Ok(s)),
                    Err(why) => {
                        self.skipped += 1;
                        log::warn!(
                            "skipping sentence {} ending at line {}: {why}",
                            s.sent_id.as_deref().unwrap_or("?"),
                            self.line_no
                        );
                    }
                },
            }
        }
        None
    }
}

pub fn read_conllu(path: impl AsRef<Path>) -> Result<ConlluReader<BufReader<File>>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(ConlluReader::new(BufReader::new(f)))
}

/// Writes sentences back out as CoNLL-U.
pub fn write_conllu<'a, W, I>(mut w: W, sentences: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a ParsedSentence>,
{
    for s in sentences {
        for c in &s.comments {
            writeln!(w, "#{c}")?;
        }
        let mut tokens: Vec<&Token> = s.tokens.iter().collect();
        tokens.sort_by_key(|t| t.id);
        for t in tokens {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                t.id, t.form, t.lemma, t.upos, t.xpos, t.feats, t.head, t.deprel, t.deps, t.misc
            )?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Reads a `sent_id<TAB>paragraph_id` mapping.
pub fn read_sentence_map(path: impl AsRef<Path>) -> Result<HashMap<String, String>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut map = HashMap::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(s), Some(p), None) => {
                map.insert(s.trim().to_string(), p.trim().to_string());
            }
            _ => return Err(Error::parse(i + 1, "expected sent_id<TAB>paragraph_id")),
        }
    }
    Ok(map)
}

/// Fills in missing paragraph ids from a sentence map.
pub fn assign_paragraphs(sentences: &mut [ParsedSentence], map: &HashMap<String, String>) {
    for s in sentences {
        if s.paragraph_id.is_none() {
            if let Some(p) = s.sent_id.as_ref().and_then(|id| map.get(id)) {
                s.paragraph_id = Some(p.clone());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SvoTuple {
    pub subject: Vec<String>,
    pub verb: String,
    pub object: Option<Vec<String>>,
    pub negated: bool,
    /// Built from a passive clause: the agent fills the subject role and the
    /// passive subject the object role.
    pub passive: bool,
    pub paragraph_id: Option<String>,
    pub year: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SvPair {
    pub subject: Vec<String>,
    pub verb: String,
    pub paragraph_id: Option<String>,
    pub year: Option<i32>,
}

struct Tree<'a> {
    children: HashMap<usize, Vec<&'a Token>>,
}

impl<'a> Tree<'a> {
    fn new(s: &'a ParsedSentence) -> Self {
        let mut children: HashMap<usize, Vec<&Token>> = HashMap::new();
        for t in &s.tokens {
            children.entry(t.head).or_default().push(t);
        }
        for c in children.values_mut() {
            c.sort_by_key(|t| t.id);
        }
        Tree { children }
    }

    fn children(&self, id: usize) -> &[&'a Token] {
        self.children.get(&id).map_or(&[], Vec::as_slice)
    }

    fn children_with(&self, id: usize, pred: impl Fn(&Token) -> bool) -> Vec<&'a Token> {
        self.children(id).iter().copied().filter(|t| pred(t)).collect()
    }

    /// Head lemma plus its adjectival and compound modifiers (recursively),
    /// in token order.
    fn noun_phrase(&self, head: &Token) -> Vec<String> {
        let mut members = vec![head];
        let mut stack = vec![head.id];
        while let Some(id) = stack.pop() {
            for c in self.children(id) {
                let is_mod = c.base_rel() == "amod"
                    || (c.base_rel() == "compound" && c.deprel != "compound:prt");
                if is_mod {
                    members.push(c);
                    stack.push(c.id);
                }
            }
        }
        members.sort_by_key(|t| t.id);
        members.iter().map(|t| t.norm_lemma()).collect()
    }

    fn negated(&self, verb: &Token) -> bool {
        self.children(verb.id).iter().any(|c| {
            c.deprel == "neg"
                || (c.base_rel() == "advmod" && matches!(c.norm_lemma().as_str(), "not" | "never" | "n't"))
        })
    }
}

fn is_active_subject(t: &Token) -> bool {
    t.deprel == "nsubj"
}

fn is_passive_subject(t: &Token) -> bool {
    t.deprel == "nsubj:pass" || t.deprel == "nsubjpass"
}

fn is_object(t: &Token) -> bool {
    t.deprel == "obj" || t.deprel == "dobj"
}

fn is_agent(t: &Token) -> bool {
    matches!(t.deprel.as_str(), "obl:agent" | "nmod:agent" | "agent")
}

fn verbs(s: &ParsedSentence) -> Vec<&Token> {
    let mut v: Vec<&Token> = s.tokens.iter().filter(|t| t.upos == "VERB").collect();
    v.sort_by_key(|t| t.id);
    v
}

/// Subject-verb(-object) tuples for every VERB token with a subject.
pub fn extract_svo(sentence: &ParsedSentence) -> Vec<SvoTuple> {
    let tree = Tree::new(sentence);
    let mut out = Vec::new();
    for verb in verbs(sentence) {
        // Well-formed trees give each verb one subject and at most one
        // object; parser output sometimes gives more, and every pairing is
        // kept so the result does not depend on token order.
        let mut pairs: Vec<(&Token, Option<&Token>, bool)> = Vec::new();
        let subjects = tree.children_with(verb.id, is_active_subject);
        if subjects.is_empty() {
            for agent in tree.children_with(verb.id, is_agent) {
                for patient in tree.children_with(verb.id, is_passive_subject) {
                    pairs.push((agent, Some(patient), true));
                }
            }
        } else {
            let objects = tree.children_with(verb.id, is_object);
            for &subject in &subjects {
                if objects.is_empty() {
                    pairs.push((subject, None, false));
                }
                for &object in &objects {
                    pairs.push((subject, Some(object), false));
                }
            }
        }
        for (subject, object, passive) in pairs {
            out.push(SvoTuple {
                subject: tree.noun_phrase(subject),
                verb: verb.norm_lemma(),
                object: object.map(|o| tree.noun_phrase(o)),
                negated: tree.negated(verb),
                passive,
                paragraph_id: sentence.paragraph_id.clone(),
                year: sentence.year,
            });
        }
    }
    out
}

/// Active subject and head verb for every VERB token with an `nsubj`, one
/// pair per subject.
pub fn extract_subject_verb(sentence: &ParsedSentence) -> Vec<SvPair> {
    let tree = Tree::new(sentence);
    verbs(sentence)
        .into_iter()
        .flat_map(|verb| {
            tree.children_with(verb.id, is_active_subject)
                .into_iter()
                .map(|subj| SvPair {
                    subject: tree.noun_phrase(subj),
                    verb: verb.norm_lemma(),
                    paragraph_id: sentence.paragraph_id.clone(),
                    year: sentence.year,
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Labels with a surface form among the words of `np`.
pub fn np_contains_label<'a, S: AsRef<str>>(np: &[S], labels: &'a [LabelSet]) -> Vec<&'a LabelSet> {
    labels.iter().filter(|l| l.matches_any(np)).collect()
}
