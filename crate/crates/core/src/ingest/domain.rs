use psl::Psl;

/// Registrable domain (public suffix plus one label) of a URL or bare host,
/// resolved against the public suffix list compiled into the `psl` crate.
pub fn extract_domain(url: &str) -> Option<String> {
    let s = url.trim();
    if s.is_empty() || s.contains(char::is_whitespace) {
        return None;
    }
    let rest = match s.find("://") {
        Some(i) => &s[i + 3..],
        None => s.strip_prefix("//").unwrap_or(s),
    };
    let authority = rest.split(['/', '?', '#']).next()?;
    let host_port = authority.rsplit('@').next()?;
    let host = host_port.split(':').next()?.trim_end_matches('.');
    if host.is_empty() || !host.contains('.') {
        return None;
    }
    let host = host.to_ascii_lowercase();
    let valid = host.split('.').all(|label| {
        !label.is_empty()
            && label.len() <= 63
            && label.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
            && !label.starts_with('-')
            && !label.ends_with('-')
    });
    if !valid || host.parse::<std::net::Ipv4Addr>().is_ok() {
        return None;
    }
    let domain = psl::List.domain(host.as_bytes())?;
    if !domain.suffix().is_known() {
        return None;
    }
    std::str::from_utf8(domain.as_bytes()).ok().map(str::to_string)
}
