//! Timestamped command scripts for headless replay and session event logs.
//!
//! Grammar, one command per line:
//!
//! ```text
//! <tick> terraform <grid> <word,word,...>
//! <tick> task <villager_id> chop <x> <y>
//! <tick> task <villager_id> collect <x> <y>
//! <tick> task <villager_id> move <x> <y>
//! <tick> task <villager_id> attack <monster_id>
//! <tick> task <villager_id> idle
//! <tick> sync
//! ```
//!
//! A command at tick `t` is applied before the simulation advances from `t`
//! to `t + 1`. `sync` changes nothing; event logs use it to record how far a
//! session has been advanced. Blank lines and lines starting with `#` are
//! ignored. Ticks must not decrease.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use super::entities::Task;
use crate::tilemap::{Cell, WORLD_SIZE};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScriptError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("cannot read script: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Terraform { grid_index: usize, words: Vec<String> },
    Task { villager_id: u32, task: Task },
    Sync,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedCommand {
    pub tick: u64,
    pub command: Command,
}

impl fmt::Display for TimedCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.tick)?;
        match &self.command {
            Command::Terraform { grid_index, words } => write!(f, "terraform {grid_index} {}", words.join(",")),
            Command::Sync => f.write_str("sync"),
            Command::Task { villager_id, task } => {
                write!(f, "task {villager_id} {}", task.verb())?;
                match task {
                    Task::Idle => Ok(()),
                    Task::MoveTo { target: c } | Task::Chop { cell: c } | Task::Collect { cell: c } => {
                        write!(f, " {} {}", c.x, c.y)
                    }
                    Task::Attack { monster_id } => write!(f, " {monster_id}"),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Script {
    pub commands: Vec<TimedCommand>,
}

fn number<T: FromStr>(token: Option<&str>, what: &str) -> Result<T, String> {
    let token = token.ok_or_else(|| format!("missing {what}"))?;
    token.parse().map_err(|_| format!("{what} {token:?} is not a number"))
}

fn cell(tokens: &mut std::str::SplitWhitespace<'_>) -> Result<Cell, String> {
    let x: usize = number(tokens.next(), "x")?;
    let y: usize = number(tokens.next(), "y")?;
    if x >= WORLD_SIZE || y >= WORLD_SIZE {
        return Err(format!("cell ({x}, {y}) is outside the world"));
    }
    Ok(Cell::new(x, y))
}

fn parse_line(text: &str) -> Result<TimedCommand, String> {
    let mut tokens = text.split_whitespace();
    let tick: u64 = number(tokens.next(), "tick")?;
    let verb = tokens.next().ok_or("missing command")?;
    let command = match verb {
        "terraform" => {
            let grid_index: usize = number(tokens.next(), "grid index")?;
            let list = tokens.next().ok_or("missing word list")?;
            let words: Vec<String> = list.split(',').map(str::to_string).collect();
            if words.iter().any(String::is_empty) {
                return Err("empty word in word list".into());
            }
            Command::Terraform { grid_index, words }
        }
        "task" => {
            let villager_id: u32 = number(tokens.next(), "villager id")?;
            let kind = tokens.next().ok_or("missing task kind")?;
            let task = match kind {
                "chop" => Task::Chop { cell: cell(&mut tokens)? },
                "collect" => Task::Collect { cell: cell(&mut tokens)? },
                "move" => Task::MoveTo { target: cell(&mut tokens)? },
                "attack" => Task::Attack { monster_id: number(tokens.next(), "monster id")? },
                "idle" => Task::Idle,
                other => return Err(format!("unknown task {other:?}")),
            };
            Command::Task { villager_id, task }
        }
        "sync" => Command::Sync,
        other => return Err(format!("unknown command {other:?}")),
    };
    if let Some(extra) = tokens.next() {
        return Err(format!("unexpected trailing argument {extra:?}"));
    }
    Ok(TimedCommand { tick, command })
}

impl Script {
    pub fn parse(text: &str) -> Result<Script, ScriptError> {
        let mut commands: Vec<TimedCommand> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cmd = parse_line(line).map_err(|reason| ScriptError::Malformed { line: i + 1, reason })?;
            if commands.last().is_some_and(|prev| prev.tick > cmd.tick) {
                return Err(ScriptError::Malformed { line: i + 1, reason: "tick goes backwards".into() });
            }
            commands.push(cmd);
        }
        Ok(Script { commands })
    }

    pub fn load(path: &Path) -> Result<Script, ScriptError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScriptError::Io(e.to_string()))?;
        Self::parse(&text)
    }

    pub fn push(&mut self, tick: u64, command: Command) {
        self.commands.push(TimedCommand { tick, command });
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    /// Script text with one command per line.
    pub fn render(&self) -> String {
        self.commands.iter().map(|c| format!("{c}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_verb() {
        let text = "# opening\n0 terraform 0 forest\n3 task 3 chop 4 5\n3 task 1 attack 4\n\n9 task 2 move 10 11\n9 task 3 collect 1 1\n9 task 2 idle\n12 sync\n";
        let script = Script::parse(text).unwrap();
        assert_eq!(script.commands.len(), 7);
        assert_eq!(
            script.commands[0].command,
            Command::Terraform { grid_index: 0, words: vec!["forest".into()] }
        );
        assert_eq!(
            script.commands[1].command,
            Command::Task { villager_id: 3, task: Task::Chop { cell: Cell::new(4, 5) } }
        );
        assert_eq!(Script::parse(&script.render()).unwrap(), script);
    }

    #[test]
    fn rejects_unknown_verbs_and_bad_args() {
        let err = |t: &str| match Script::parse(t) {
            Err(ScriptError::Malformed { line, .. }) => line,
            other => panic!("expected error, got {other:?}"),
        };
        assert_eq!(err("0 dance"), 1);
        assert_eq!(err("0 sync\n1 task 1 fly 2 2"), 2);
        assert_eq!(err("0 task 1 chop 40 0"), 1);
        assert_eq!(err("0 terraform 1 a,,b"), 1);
        assert_eq!(err("5 sync\n4 sync"), 2);
        assert_eq!(err("x sync"), 1);
        assert_eq!(err("0 sync extra"), 1);
    }

    #[test]
    fn empty_script() {
        assert!(Script::parse("").unwrap().is_empty());
    }
}
