//! Fixture package: real unsafe usage with call-like API occurrences.

use std::mem;

pub struct Header {
    a: u32,
    b: u32,
}

pub fn rebuild(first: *mut Header, second: *mut Header) -> Box<Header> {
    unsafe {
        let blank: Header = mem::zeroed::<Header>();
        let mut boxed = Box::from_raw(first);
        boxed.a = blank.a;
        let other = Box::from_raw(second);
        boxed.b = other.b;
        boxed
    }
}

pub fn pick(values: &[u32]) -> u32 {
    let wrapped = std::ptr::NonNull::new(values.as_ptr() as *mut u32).unwrap();
    // Not a call: a plain mention of new_unchecked stays uncounted.
    let from_rawhide = wrapped.as_ptr();
    unsafe { *from_rawhide }
}

pub fn pinned(value: u32) -> std::pin::Pin<Box<u32>> {
    unsafe { std::pin::Pin::new_unchecked(Box::new(value)) }
}
