use crate::scan::ParsedEh;

use super::DatapathError;

/// Where the inserted octets go inside an existing header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsertionPlan {
    pub tailpad_size: usize,
    pub eh_notail_size: usize,
    pub new_headpad_size: usize,
    pub new_tailpad_size: usize,
    /// Net growth of the packet; negative when a long tail padding is
    /// replaced by a shorter one.
    pub extra_room: isize,
    pub ioam_size: usize,
}

impl InsertionPlan {
    pub fn new(
        eh_size: usize,
        tailpad_size: usize,
        ioam_size: usize,
    ) -> Result<Self, DatapathError> {
        if ioam_size % 4 != 0 || ioam_size < 12 {
            return Err(DatapathError::BadIoamSize(ioam_size));
        }
        let eh_notail_size = eh_size - tailpad_size;
        let new_headpad_size = (4 - eh_notail_size % 4) % 4;
        let new_tailpad_size = (8 - (eh_notail_size + new_headpad_size + ioam_size) % 8) % 8;
        let extra_room = ioam_size as isize - tailpad_size as isize
            + new_headpad_size as isize
            + new_tailpad_size as isize;
        Ok(Self {
            tailpad_size,
            eh_notail_size,
            new_headpad_size,
            new_tailpad_size,
            extra_room,
            ioam_size,
        })
    }

    pub fn new_eh_size(&self) -> usize {
        self.eh_notail_size + self.new_headpad_size + self.ioam_size + self.new_tailpad_size
    }
}

/// Size of the padding option that ends the header, if the last padding
/// does.
pub(crate) fn tail_padding(parsed: &ParsedEh) -> usize {
    match (parsed.eh, parsed.last_pad) {
        (Some(eh), Some(pad)) if pad.end() == eh.end() => pad.size,
        _ => 0,
    }
}

/// `None` when the packet has no header of the parsed kind; insertion then
/// splices a complete pre-built header instead.
pub fn plan_insertion(
    parsed: &ParsedEh,
    ioam_size: usize,
) -> Result<Option<InsertionPlan>, DatapathError> {
    match parsed.eh {
        None => {
            if ioam_size % 4 != 0 || ioam_size < 12 {
                return Err(DatapathError::BadIoamSize(ioam_size));
            }
            Ok(None)
        }
        Some(eh) => InsertionPlan::new(eh.size, tail_padding(parsed), ioam_size).map(Some),
    }
}
