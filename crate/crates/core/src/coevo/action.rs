use std::fmt;

use serde::{Deserialize, Serialize};

use crate::world::Direction;

/// Everything an agent can be seen doing in one tick. The declaration order
/// is the tie-break order for predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionLabel {
    MoveN,
    MoveE,
    MoveS,
    MoveW,
    Stay,
    Pick,
    Place,
    Process,
}

impl ActionLabel {
    pub const COUNT: usize = 8;

    pub const ALL: [ActionLabel; Self::COUNT] = [
        ActionLabel::MoveN,
        ActionLabel::MoveE,
        ActionLabel::MoveS,
        ActionLabel::MoveW,
        ActionLabel::Stay,
        ActionLabel::Pick,
        ActionLabel::Place,
        ActionLabel::Process,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> ActionLabel {
        Self::ALL[i]
    }

    pub fn from_direction(d: Direction) -> ActionLabel {
        match d {
            Direction::N => ActionLabel::MoveN,
            Direction::E => ActionLabel::MoveE,
            Direction::S => ActionLabel::MoveS,
            Direction::W => ActionLabel::MoveW,
        }
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            ActionLabel::MoveN => Some(Direction::N),
            ActionLabel::MoveE => Some(Direction::E),
            ActionLabel::MoveS => Some(Direction::S),
            ActionLabel::MoveW => Some(Direction::W),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActionLabel::MoveN => "move_n",
            ActionLabel::MoveE => "move_e",
            ActionLabel::MoveS => "move_s",
            ActionLabel::MoveW => "move_w",
            ActionLabel::Stay => "stay",
            ActionLabel::Pick => "pick",
            ActionLabel::Place => "place",
            ActionLabel::Process => "process",
        }
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
