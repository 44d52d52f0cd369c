use super::games::{Action, BasicStep};

/// An expert's decision rule on the basic time scale.
///
/// `history` is the actual interaction so far (plus, during look-ahead, the
/// expert's own hypothetical moves within the current block). Strategies are
/// deterministic functions of it.
pub trait Strategy: Send + Sync {
    fn name(&self) -> &str;
    fn act(&self, history: &[BasicStep]) -> Action;
}

#[derive(Debug, Clone)]
pub struct Constant {
    name: String,
    action: Action,
}

impl Strategy for Constant {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&self, _history: &[BasicStep]) -> Action {
        self.action
    }
}

pub fn constant_strategy(action: Action) -> Constant {
    let name = match action {
        Action::Cooperate => "always-c",
        Action::Defect => "always-d",
    };
    Constant { name: name.to_string(), action }
}

/// Cooperates first, then copies the opponent's last observed move.
#[derive(Debug, Clone, Default)]
pub struct TitForTat;

impl Strategy for TitForTat {
    fn name(&self) -> &str {
        "tit-for-tat"
    }

    fn act(&self, history: &[BasicStep]) -> Action {
        history.last().and_then(|s| s.opponent).unwrap_or(Action::Cooperate)
    }
}

/// C, D, C, D, ... by basic time.
#[derive(Debug, Clone, Default)]
pub struct Alternate;

impl Strategy for Alternate {
    fn name(&self) -> &str {
        "alternate"
    }

    fn act(&self, history: &[BasicStep]) -> Action {
        if history.len().is_multiple_of(2) {
            Action::Cooperate
        } else {
            Action::Defect
        }
    }
}

/// Registry entry: name, declared program length in bits.
pub fn registry() -> &'static [(&'static str, u32)] {
    &[
        ("always-c", 2),
        ("always-d", 2),
        ("tit-for-tat", 3),
        ("alternate", 3),
        ("pray", 4),
        ("curse", 4),
    ]
}

/// Looks up a hand-written strategy and its declared code length.
pub fn lookup_strategy(name: &str) -> Option<(Box<dyn Strategy>, u32)> {
    let len = registry().iter().find(|(n, _)| *n == name)?.1;
    let s: Box<dyn Strategy> = match name {
        "always-c" => Box::new(constant_strategy(Action::Cooperate)),
        "always-d" => Box::new(constant_strategy(Action::Defect)),
        "pray" => Box::new(Constant { name: "pray".into(), action: Action::Cooperate }),
        "curse" => Box::new(Constant { name: "curse".into(), action: Action::Defect }),
        "tit-for-tat" => Box::new(TitForTat),
        "alternate" => Box::new(Alternate),
        _ => return None,
    };
    Some((s, len))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(opponent: Action) -> BasicStep {
        BasicStep { t_basic: 1, master_t: 1, expert: 0, ours: Action::Cooperate, opponent: Some(opponent), loss: 0.0 }
    }

    #[test]
    fn constants_ignore_history() {
        let h = vec![step(Action::Defect); 5];
        assert_eq!(constant_strategy(Action::Cooperate).act(&h), Action::Cooperate);
        assert_eq!(constant_strategy(Action::Defect).act(&[]), Action::Defect);
    }

    #[test]
    fn tit_for_tat_copies_opponent() {
        assert_eq!(TitForTat.act(&[]), Action::Cooperate);
        assert_eq!(TitForTat.act(&[step(Action::Defect)]), Action::Defect);
    }

    #[test]
    fn registry_is_complete_and_kraft_feasible() {
        for (name, len) in registry() {
            let (s, l) = lookup_strategy(name).unwrap();
            assert_eq!(s.name(), *name);
            assert_eq!(l, *len);
        }
        assert!(lookup_strategy("aixi").is_none());
        let kraft: f64 = registry().iter().map(|(_, l)| 2f64.powi(-(*l as i32))).sum();
        assert!(kraft <= 1.0);
    }
}
