/// Pins the calling thread to the CPU it is running on. Returns false where
/// pinning is unsupported or refused.
#[cfg(target_os = "linux")]
pub fn pin_current_thread() -> bool {
    // SAFETY: cpu_set_t is plain data; the calls only read the set we own.
    unsafe {
        let cpu = libc::sched_getcpu();
        if cpu < 0 {
            return false;
        }
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(cpu as usize, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) == 0
    }
}

#[cfg(not(target_os = "linux"))]
pub fn pin_current_thread() -> bool {
    false
}
