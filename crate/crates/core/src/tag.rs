use std::fmt;

/// Identifies which protocol a message or transcript entry belongs to.
///
/// The discriminant is the tag byte written into every frame header.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum ProtocolTag {
    Setup = 0,
    Mul = 1,
    PrivateCompare = 2,
    Mux = 3,
    ModulusConversion = 4,
    Compare = 5,
    Divide = 6,
    Reveal = 7,
    DetectTies = 8,
    Shuffle = 9,
    Merge = 10,
    AurocNoTies = 11,
    AurocTies = 12,
    Aupr = 13,
    Outsource = 14,
    Result = 15,
    Hello = 16,
    Script = 17,
}

impl ProtocolTag {
    pub const ALL: [ProtocolTag; 18] = [
        ProtocolTag::Setup,
        ProtocolTag::Mul,
        ProtocolTag::PrivateCompare,
        ProtocolTag::Mux,
        ProtocolTag::ModulusConversion,
        ProtocolTag::Compare,
        ProtocolTag::Divide,
        ProtocolTag::Reveal,
        ProtocolTag::DetectTies,
        ProtocolTag::Shuffle,
        ProtocolTag::Merge,
        ProtocolTag::AurocNoTies,
        ProtocolTag::AurocTies,
        ProtocolTag::Aupr,
        ProtocolTag::Outsource,
        ProtocolTag::Result,
        ProtocolTag::Hello,
        ProtocolTag::Script,
    ];

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.get(b as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolTag::Setup => "setup",
            ProtocolTag::Mul => "mul",
            ProtocolTag::PrivateCompare => "private-compare",
            ProtocolTag::Mux => "mux",
            ProtocolTag::ModulusConversion => "modulus-conversion",
            ProtocolTag::Compare => "compare",
            ProtocolTag::Divide => "divide",
            ProtocolTag::Reveal => "reveal",
            ProtocolTag::DetectTies => "detect-ties",
            ProtocolTag::Shuffle => "shuffle",
            ProtocolTag::Merge => "merge",
            ProtocolTag::AurocNoTies => "auroc",
            ProtocolTag::AurocTies => "auroc-tie",
            ProtocolTag::Aupr => "aupr",
            ProtocolTag::Outsource => "outsource",
            ProtocolTag::Result => "result",
            ProtocolTag::Hello => "hello",
            ProtocolTag::Script => "script",
        }
    }
}

impl fmt::Display for ProtocolTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
