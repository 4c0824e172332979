//! The reference prefix-free machine.
//!
//! A program is `1^m 0` followed by `m` three-bit opcodes, so `|p| = 4m + 1`
//! and the unary length header makes the set of well-formed programs
//! prefix-free. Execution is a binary brainfuck variant over a tape that is
//! semi-infinite to the right and initially all zero.
//!
//! | code | opcode    | effect                                                 |
//! |------|-----------|--------------------------------------------------------|
//! | 000  | LEFT      | head -= 1, saturating at cell 0                        |
//! | 001  | RIGHT     | head += 1                                              |
//! | 010  | FLIP      | toggle the scanned cell                                |
//! | 011  | OUT       | append the scanned cell to the output                  |
//! | 100  | LOOPSTART | if the cell is 0, jump past the matching LOOPEND       |
//! | 101  | LOOPEND   | jump back to the matching LOOPSTART                    |
//! | 110  | HALT      | stop                                                   |
//! | 111  | READAUX   | cell := next bit of the auxiliary stream               |
//!
//! Every executed instruction costs one step, jumps included.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::bits::BitString;
use crate::codes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Opcode {
    Left = 0,
    Right = 1,
    Flip = 2,
    Out = 3,
    LoopStart = 4,
    LoopEnd = 5,
    Halt = 6,
    ReadAux = 7,
}

impl Opcode {
    pub const ALL: [Opcode; 8] = [
        Opcode::Left,
        Opcode::Right,
        Opcode::Flip,
        Opcode::Out,
        Opcode::LoopStart,
        Opcode::LoopEnd,
        Opcode::Halt,
        Opcode::ReadAux,
    ];

    pub fn from_code(code: u8) -> Opcode {
        Self::ALL[(code & 7) as usize]
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Left => "LEFT",
            Opcode::Right => "RIGHT",
            Opcode::Flip => "FLIP",
            Opcode::Out => "OUT",
            Opcode::LoopStart => "LOOPSTART",
            Opcode::LoopEnd => "LOOPEND",
            Opcode::Halt => "HALT",
            Opcode::ReadAux => "READAUX",
        }
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvalidProgram {
    #[error("length header is not terminated by a 0")]
    TruncatedHeader,
    #[error("header announces {instructions} instructions ({expected} bits) but the string has {actual} bits")]
    WrongLength {
        instructions: usize,
        expected: usize,
        actual: usize,
    },
    #[error("LOOPEND at instruction {0} has no matching LOOPSTART")]
    UnmatchedLoopEnd(usize),
    #[error("LOOPSTART at instruction {0} is never closed")]
    UnmatchedLoopStart(usize),
}

/// A decoded, well-formed program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    bits: BitString,
    instrs: Vec<Opcode>,
    /// For bracket instructions, the index of the matching bracket.
    /// Unused entries are zero.
    bracket_map: Vec<u32>,
}

impl Program {
    pub fn decode(bits: &BitString) -> Result<Program, InvalidProgram> {
        let m = bits
            .iter()
            .position(|b| !b)
            .ok_or(InvalidProgram::TruncatedHeader)?;
        let expected = 4 * m + 1;
        if bits.len() != expected {
            return Err(InvalidProgram::WrongLength {
                instructions: m,
                expected,
                actual: bits.len(),
            });
        }
        let instrs: Vec<Opcode> = (0..m)
            .map(|j| {
                let base = m + 1 + 3 * j;
                let code =
                    (0..3).fold(0u8, |acc, k| (acc << 1) | bits.get(base + k).unwrap() as u8);
                Opcode::from_code(code)
            })
            .collect();
        let bracket_map = match_brackets(&instrs)?;
        Ok(Program {
            bits: bits.clone(),
            instrs,
            bracket_map,
        })
    }

    /// Encodes an instruction list. Fails only on unbalanced brackets.
    pub fn from_instrs(instrs: &[Opcode]) -> Result<Program, InvalidProgram> {
        let bracket_map = match_brackets(instrs)?;
        let mut bits = BitString::new();
        for _ in instrs {
            bits.push(true);
        }
        bits.push(false);
        for op in instrs {
            let c = op.code();
            bits.push(c & 4 != 0);
            bits.push(c & 2 != 0);
            bits.push(c & 1 != 0);
        }
        Ok(Program {
            bits,
            instrs: instrs.to_vec(),
            bracket_map,
        })
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn instrs(&self) -> &[Opcode] {
        &self.instrs
    }

    /// Number of instructions `m`.
    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    /// Index of the bracket matching the one at `i`, if `i` is a bracket.
    pub fn matching_bracket(&self, i: usize) -> Option<usize> {
        matches!(
            self.instrs.get(i),
            Some(Opcode::LoopStart | Opcode::LoopEnd)
        )
        .then(|| self.bracket_map[i] as usize)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits)
    }
}

fn match_brackets(instrs: &[Opcode]) -> Result<Vec<u32>, InvalidProgram> {
    let mut map = vec![0u32; instrs.len()];
    let mut open = Vec::new();
    for (i, op) in instrs.iter().enumerate() {
        match op {
            Opcode::LoopStart => open.push(i),
            Opcode::LoopEnd => {
                let j = open.pop().ok_or(InvalidProgram::UnmatchedLoopEnd(i))?;
                map[i] = j as u32;
                map[j] = i as u32;
            }
            _ => {}
        }
    }
    match open.pop() {
        Some(j) => Err(InvalidProgram::UnmatchedLoopStart(j)),
        None => Ok(map),
    }
}

/// Fast well-formedness test for an instruction vector packed as base-8
/// digits (first instruction most significant).
pub(crate) fn brackets_balanced(packed: u64, m: usize) -> bool {
    let mut depth = 0i32;
    for j in (0..m).rev() {
        match (packed >> (3 * j)) & 7 {
            4 => depth += 1,
            5 => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => {}
        }
    }
    depth == 0
}

/// The auxiliary input stream `1^{|y|} 0 y 0 0 0 ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxStream {
    y: BitString,
    prefix: BitString,
}

impl AuxStream {
    pub fn new(y: &BitString) -> Self {
        Self {
            y: y.clone(),
            prefix: codes::bar_encode(y),
        }
    }

    pub fn empty() -> Self {
        Self::new(&BitString::new())
    }

    /// The conditional input `y` this stream encodes.
    pub fn input(&self) -> &BitString {
        &self.y
    }

    /// Length of the non-zero-padded part of the stream.
    pub fn prefix_len(&self) -> usize {
        self.prefix.len()
    }

    #[inline]
    pub fn read(&self, pos: usize) -> bool {
        self.prefix.get(pos).unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RunOutcome {
    Halted { output: BitString, steps: u64 },
    FuelExhausted { fuel: u64 },
    NonHaltingCertified { at_step: u64 },
    Invalid,
}

impl RunOutcome {
    pub fn is_halted(&self) -> bool {
        matches!(self, RunOutcome::Halted { .. })
    }
}

/// Live execution state. Exposed so tests can single-step a program.
#[derive(Debug, Clone)]
pub struct MachineState<'a> {
    program: &'a Program,
    aux: &'a AuxStream,
    pub pc: usize,
    pub head: usize,
    tape: Vec<u64>,
    pub out: BitString,
    pub aux_pos: usize,
    pub steps: u64,
}

/// Configuration used for repeat detection. The aux position is clamped
/// at the end of the stream prefix since every read beyond it yields 0.
#[derive(Debug, Clone)]
struct Snapshot {
    pc: usize,
    head: usize,
    aux_pos: usize,
    tape: Vec<u64>,
}

impl<'a> MachineState<'a> {
    pub fn new(program: &'a Program, aux: &'a AuxStream) -> Self {
        Self {
            program,
            aux,
            pc: 0,
            head: 0,
            tape: vec![0],
            out: BitString::new(),
            aux_pos: 0,
            steps: 0,
        }
    }

    #[inline]
    pub fn cell(&self) -> bool {
        self.tape
            .get(self.head / 64)
            .is_some_and(|w| (w >> (self.head % 64)) & 1 == 1)
    }

    #[inline]
    fn set_cell(&mut self, v: bool) {
        let (w, b) = (self.head / 64, self.head % 64);
        if w >= self.tape.len() {
            self.tape.resize(w + 1, 0);
        }
        if v {
            self.tape[w] |= 1 << b;
        } else {
            self.tape[w] &= !(1 << b);
        }
    }

    /// Number of tape cells ever allocated, rounded up to whole words.
    pub fn tape_words(&self) -> usize {
        self.tape.len()
    }

    pub fn is_finished(&self) -> bool {
        self.pc >= self.program.instrs.len()
    }

    /// Executes one instruction. Returns `false` once the machine has
    /// halted (fell off the end or executed HALT) and does nothing then.
    pub fn step(&mut self) -> bool {
        let Some(&op) = self.program.instrs.get(self.pc) else {
            return false;
        };
        self.steps += 1;
        match op {
            Opcode::Left => {
                self.head = self.head.saturating_sub(1);
                self.pc += 1;
            }
            Opcode::Right => {
                self.head += 1;
                self.pc += 1;
            }
            Opcode::Flip => {
                let c = self.cell();
                self.set_cell(!c);
                self.pc += 1;
            }
            Opcode::Out => {
                let c = self.cell();
                self.out.push(c);
                self.pc += 1;
            }
            Opcode::LoopStart => {
                if self.cell() {
                    self.pc += 1;
                } else {
                    self.pc = self.program.bracket_map[self.pc] as usize + 1;
                }
            }
            Opcode::LoopEnd => {
                self.pc = self.program.bracket_map[self.pc] as usize;
            }
            Opcode::Halt => {
                self.pc = self.program.instrs.len();
            }
            Opcode::ReadAux => {
                let b = self.aux.read(self.aux_pos);
                self.aux_pos += 1;
                self.set_cell(b);
                self.pc += 1;
            }
        }
        true
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            pc: self.pc,
            head: self.head,
            aux_pos: self.aux_pos.min(self.aux.prefix_len()),
            tape: self.tape.clone(),
        }
    }

    fn matches(&self, s: &Snapshot) -> bool {
        if s.pc != self.pc
            || s.head != self.head
            || s.aux_pos != self.aux_pos.min(self.aux.prefix_len())
        {
            return false;
        }
        // Untouched cells are zero, so compare with zero extension.
        let n = s.tape.len().max(self.tape.len());
        (0..n)
            .all(|i| s.tape.get(i).copied().unwrap_or(0) == self.tape.get(i).copied().unwrap_or(0))
    }
}

/// Runs `program` for at most `fuel` steps with the cycle detector on.
pub fn run(program: &Program, aux: &AuxStream, fuel: u64) -> RunOutcome {
    run_with(program, aux, fuel, true)
}

/// Runs `program` for at most `fuel` steps.
///
/// With `detect_cycles`, configurations are sampled at power-of-two step
/// counts (Brent's scheme) and every later configuration is compared with
/// the latest sample. A repeat of (pc, head, tape contents, aux position)
/// proves the run never halts, whatever happened to the output meanwhile.
pub fn run_with(program: &Program, aux: &AuxStream, fuel: u64, detect_cycles: bool) -> RunOutcome {
    let mut state = MachineState::new(program, aux);
    let mut sample: Option<Snapshot> = None;
    let mut next_sample = 1u64;
    loop {
        if state.is_finished() {
            return RunOutcome::Halted {
                output: state.out,
                steps: state.steps,
            };
        }
        if state.steps >= fuel {
            return RunOutcome::FuelExhausted { fuel };
        }
        state.step();
        if detect_cycles && !state.is_finished() {
            if sample.as_ref().is_some_and(|s| state.matches(s)) {
                return RunOutcome::NonHaltingCertified {
                    at_step: state.steps,
                };
            }
            if state.steps == next_sample {
                sample = Some(state.snapshot());
                next_sample *= 2;
            }
        }
    }
}

/// Decodes and runs a raw bit-string, mapping malformed programs to
/// [`RunOutcome::Invalid`].
pub fn run_bits(bits: &BitString, aux: &AuxStream, fuel: u64, detect_cycles: bool) -> RunOutcome {
    match Program::decode(bits) {
        Ok(p) => run_with(&p, aux, fuel, detect_cycles),
        Err(_) => RunOutcome::Invalid,
    }
}

/// The literal transcription of `x`: for each bit, FLIP if the scanned cell
/// differs, then OUT. Uses at most `2|x|` instructions and runs in exactly
/// as many steps.
pub fn transcription(x: &BitString) -> Program {
    let mut instrs = Vec::with_capacity(2 * x.len());
    let mut cell = false;
    for b in x.iter() {
        if b != cell {
            instrs.push(Opcode::Flip);
            cell = b;
        }
        instrs.push(Opcode::Out);
    }
    Program::from_instrs(&instrs).expect("transcription has no brackets")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{all_of_length, bits};
    use proptest::prelude::*;

    fn decode(s: &str) -> Result<Program, InvalidProgram> {
        Program::decode(&bits(s))
    }

    fn run_str(s: &str, fuel: u64) -> RunOutcome {
        run(&decode(s).unwrap(), &AuxStream::empty(), fuel)
    }

    #[test]
    fn decode_examples() {
        let p = decode("0").unwrap();
        assert_eq!(p.len(), 0);
        let p = decode("10011").unwrap();
        assert_eq!(p.instrs(), &[Opcode::Out]);
        assert_eq!(decode("10100"), Err(InvalidProgram::UnmatchedLoopStart(0)));
        assert_eq!(decode("10101"), Err(InvalidProgram::UnmatchedLoopEnd(0)));
        assert_eq!(decode(""), Err(InvalidProgram::TruncatedHeader));
        assert_eq!(decode("111"), Err(InvalidProgram::TruncatedHeader));
        assert!(matches!(
            decode("1001"),
            Err(InvalidProgram::WrongLength { .. })
        ));
        assert!(matches!(
            decode("100110"),
            Err(InvalidProgram::WrongLength { .. })
        ));
    }

    #[test]
    fn bracket_map_pairs_nested_loops() {
        use Opcode::*;
        let p = Program::from_instrs(&[LoopStart, Flip, LoopStart, LoopEnd, LoopEnd]).unwrap();
        assert_eq!(p.matching_bracket(0), Some(4));
        assert_eq!(p.matching_bracket(4), Some(0));
        assert_eq!(p.matching_bracket(2), Some(3));
        assert_eq!(p.matching_bracket(1), None);
        assert_eq!(Program::decode(p.bits()).unwrap(), p);
    }

    #[test]
    fn run_examples() {
        assert_eq!(
            run_str("0", 0),
            RunOutcome::Halted {
                output: bits(""),
                steps: 0
            }
        );
        assert_eq!(
            run_str("10011", 10),
            RunOutcome::Halted {
                output: bits("0"),
                steps: 1
            }
        );
        assert!(matches!(
            run_str("1110010100101", 1000),
            RunOutcome::NonHaltingCertified { .. }
        ));
        assert_eq!(
            run_str("110010011", 10),
            RunOutcome::Halted {
                output: bits("1"),
                steps: 2
            }
        );
    }

    #[test]
    fn fuel_boundary() {
        // FLIP;OUT needs exactly two steps.
        assert_eq!(
            run_str("110010011", 1),
            RunOutcome::FuelExhausted { fuel: 1 }
        );
        assert!(run_str("110010011", 2).is_halted());
        assert_eq!(run_str("10110", 0), RunOutcome::FuelExhausted { fuel: 0 });
        assert_eq!(
            run_str("10110", 1),
            RunOutcome::Halted {
                output: bits(""),
                steps: 1
            }
        );
    }

    #[test]
    fn loop_semantics_count_jumps() {
        use Opcode::*;
        // FLIP [ FLIP ]: enter, clear, jump back, re-test and exit.
        let p = Program::from_instrs(&[Flip, LoopStart, Flip, LoopEnd]).unwrap();
        assert_eq!(
            run(&p, &AuxStream::empty(), 100),
            RunOutcome::Halted {
                output: bits(""),
                steps: 5
            }
        );
        // [ ] on a zero cell skips in one step.
        let p = Program::from_instrs(&[LoopStart, LoopEnd]).unwrap();
        assert_eq!(
            run(&p, &AuxStream::empty(), 100),
            RunOutcome::Halted {
                output: bits(""),
                steps: 1
            }
        );
    }

    #[test]
    fn left_saturates_and_tape_extends() {
        use Opcode::*;
        let p = Program::from_instrs(&[Left, Flip, Right, Right, Out, Left, Left, Out]).unwrap();
        assert_eq!(
            run(&p, &AuxStream::empty(), 100),
            RunOutcome::Halted {
                output: bits("01"),
                steps: 8
            }
        );
    }

    #[test]
    fn readaux_consumes_self_delimited_stream() {
        use Opcode::*;
        let p = Program::from_instrs(&[ReadAux, Out, ReadAux, Out, ReadAux, Out, ReadAux, Out])
            .unwrap();
        let aux = AuxStream::new(&bits("1"));
        // stream is 1 0 1 0 0 ...
        assert_eq!(
            run(&p, &aux, 100),
            RunOutcome::Halted {
                output: bits("1010"),
                steps: 8
            }
        );
        assert_eq!(
            run(&p, &AuxStream::empty(), 100),
            RunOutcome::Halted {
                output: bits("0000"),
                steps: 8
            }
        );
    }

    #[test]
    fn repeat_with_growing_output_is_certified() {
        use Opcode::*;
        let p = Program::from_instrs(&[Flip, LoopStart, Out, LoopEnd]).unwrap();
        assert!(matches!(
            run(&p, &AuxStream::empty(), 1000),
            RunOutcome::NonHaltingCertified { .. }
        ));
        assert_eq!(
            run_with(&p, &AuxStream::empty(), 1000, false),
            RunOutcome::FuelExhausted { fuel: 1000 }
        );
    }

    #[test]
    fn aux_reads_past_the_stream_do_not_block_detection() {
        use Opcode::*;
        // FLIP [ READAUX FLIP ]: reads zeros forever, cell keeps returning to 1.
        let p = Program::from_instrs(&[Flip, LoopStart, ReadAux, Flip, LoopEnd]).unwrap();
        assert!(matches!(
            run(&p, &AuxStream::empty(), 1000),
            RunOutcome::NonHaltingCertified { .. }
        ));
        // With y = "00" the stream starts 1 1 0 ..., so the first read exits the loop.
        let aux = AuxStream::new(&bits("00"));
        assert_eq!(
            run(&p, &aux, 1000),
            RunOutcome::Halted {
                output: bits(""),
                steps: 6
            }
        );
    }

    #[test]
    fn rightward_drift_is_not_certified() {
        use Opcode::*;
        let p = Program::from_instrs(&[Flip, LoopStart, Right, Flip, LoopEnd]).unwrap();
        assert_eq!(
            run(&p, &AuxStream::empty(), 500),
            RunOutcome::FuelExhausted { fuel: 500 }
        );
    }

    #[test]
    fn valid_programs_are_prefix_free() {
        let mut valid = Vec::new();
        for len in 0..=13 {
            valid.extend(all_of_length(len).filter(|b| Program::decode(b).is_ok()));
        }
        assert_eq!(valid.iter().filter(|b| b.len() == 5).count(), 6);
        for p in &valid {
            for q in &valid {
                if p != q {
                    assert!(!p.is_prefix_of(q), "{p} is a prefix of {q}");
                }
            }
        }
    }

    #[test]
    fn transcription_reproduces_its_input() {
        for len in 0..=8 {
            for x in all_of_length(len) {
                let t = transcription(&x);
                assert!(t.len() <= 2 * len);
                assert_eq!(t.bits().len(), 4 * t.len() + 1);
                match run(&t, &AuxStream::empty(), 2 * len as u64) {
                    RunOutcome::Halted { output, steps } => {
                        assert_eq!(output, x);
                        assert_eq!(steps, t.len() as u64);
                    }
                    other => panic!("{x}: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn packed_bracket_check_agrees_with_decoder() {
        for m in 0..=4usize {
            for packed in 0..1u64 << (3 * m) {
                let instrs: Vec<Opcode> = (0..m)
                    .rev()
                    .map(|j| Opcode::from_code(((packed >> (3 * j)) & 7) as u8))
                    .collect();
                assert_eq!(
                    brackets_balanced(packed, m),
                    Program::from_instrs(&instrs).is_ok()
                );
            }
        }
    }

    fn program_strategy() -> impl Strategy<Value = Program> {
        proptest::collection::vec(0u8..8, 0..9).prop_filter_map("unbalanced", |codes| {
            let instrs: Vec<Opcode> = codes.into_iter().map(Opcode::from_code).collect();
            Program::from_instrs(&instrs).ok()
        })
    }

    proptest! {
        #[test]
        fn deterministic(p in program_strategy(), fuel in 0u64..300) {
            let aux = AuxStream::empty();
            prop_assert_eq!(run(&p, &aux, fuel), run(&p, &aux, fuel));
        }

        #[test]
        fn more_fuel_keeps_halting_outcome(p in program_strategy(), fuel in 0u64..200, extra in 0u64..500) {
            let aux = AuxStream::empty();
            if let RunOutcome::Halted { .. } = run_with(&p, &aux, fuel, false) {
                prop_assert_eq!(run_with(&p, &aux, fuel + extra, false), run_with(&p, &aux, fuel, false));
                prop_assert_eq!(run(&p, &aux, fuel + extra), run_with(&p, &aux, fuel, false));
            }
        }

        #[test]
        fn certified_programs_never_halt(p in program_strategy(), fuel in 1u64..300) {
            let aux = AuxStream::new(&BitString::from_uint(fuel, 3));
            if let RunOutcome::NonHaltingCertified { at_step } = run(&p, &aux, fuel) {
                prop_assert!(at_step <= fuel);
                prop_assert!(!run_with(&p, &aux, 10 * fuel, false).is_halted());
            }
        }

        #[test]
        fn output_needs_one_step_per_bit(p in program_strategy(), fuel in 0u64..300) {
            if let RunOutcome::Halted { output, steps } = run(&p, &AuxStream::empty(), fuel) {
                prop_assert!(steps <= fuel);
                prop_assert!(steps >= output.len() as u64);
            }
        }
    }
}
