//! Terminal questioning.

use std::io::{BufRead, Write};

use ksn_core::engine::{Correction, Respondent};
use ksn_core::ontology::SkillOntology;
use ksn_core::Error;

fn parse_answer(line: &str) -> Option<bool> {
    match line.trim().to_ascii_lowercase().as_str() {
        "y" | "yes" | "1" | "true" => Some(true),
        "n" | "no" | "0" | "false" => Some(false),
        _ => None,
    }
}

/// Asks yes/no questions on `output` and reads answers from `input`.
/// Closed input is a respondent failure.
pub struct Prompt<'a, R, W> {
    pub ontology: &'a SkillOntology,
    pub input: R,
    pub output: W,
}

impl<R: BufRead, W: Write> Prompt<'_, R, W> {
    fn read_line(&mut self) -> std::io::Result<Option<String>> {
        let mut line = String::new();
        if self.input.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        Ok(Some(line))
    }

    /// Reads `skill=y|n` lines until a blank line or end of input. `ok`
    /// confirms the prediction unchanged. Returns `None` when the learner
    /// declines to verify.
    pub fn corrections(&mut self) -> std::io::Result<Option<Vec<Correction>>> {
        writeln!(
            self.output,
            "Correct predicted skills as `skill_id=y` or `skill_id=n`, `ok` to confirm, empty line to skip."
        )?;
        let mut out = Vec::new();
        loop {
            let Some(line) = self.read_line()? else {
                return Ok((!out.is_empty()).then_some(out));
            };
            let line = line.trim();
            if line.is_empty() {
                return Ok((!out.is_empty()).then_some(out));
            }
            if line.eq_ignore_ascii_case("ok") {
                return Ok(Some(out));
            }
            let parsed = line.split_once('=').and_then(|(id, v)| {
                let skill = self.ontology.index_of(id.trim()).ok()?;
                Some(Correction {
                    skill,
                    mastered: parse_answer(v)?,
                })
            });
            match parsed {
                Some(c) => out.push(c),
                None => writeln!(self.output, "could not read `{line}`")?,
            }
        }
    }
}

impl<R: BufRead, W: Write> Respondent for Prompt<'_, R, W> {
    fn answer(&mut self, skill: usize) -> ksn_core::Result<bool> {
        let s = self.ontology.skill(skill);
        loop {
            write!(self.output, "Have you mastered `{}` ({})? [y/n] ", s.id, s.title)?;
            self.output.flush()?;
            let Some(line) = self.read_line()? else {
                return Err(Error::Respondent("input closed".into()));
            };
            if let Some(a) = parse_answer(&line) {
                return Ok(a);
            }
            writeln!(self.output, "please answer y or n")?;
        }
    }
}
