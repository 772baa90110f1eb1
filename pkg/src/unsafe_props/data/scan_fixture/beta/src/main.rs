//! Fixture package: matches hidden in comments and strings are decoys.
//! A reviewer once suggested Box::from_raw(ptr) here; see the log line.

use std::mem::MaybeUninit;

fn main() {
    let value = fill();
    /* The old implementation called from_raw(ptr) twice, which
       double-freed the buffer: from_raw(ptr) must own its input. */
    println!("mem::zeroed() would also work: {value}");
    let label = "call zeroed() or assume_init() manually";
    assert!(!label.is_empty());
}

fn fill() -> u32 {
    let mut slot = MaybeUninit::<u32>::uninit();
    unsafe {
        slot.as_mut_ptr().write_volatile(7);
        slot.assume_init()
    }
}
