//! Closed pull requests from the GitHub REST API.
//!
//! A collaborator counts as a reviewer of a PR when they wrote at least one
//! issue or review comment on it and are not its submitter. Comments are kept in
//! creation order.

use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::Deserialize;

use crate::corpus::PullRequest;
use crate::error::{Error, Result};

pub const TOKEN_ENV: &str = "TIMA_GITHUB_TOKEN";
pub const DEFAULT_API_BASE: &str = "https://api.github.com";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    /// Header names are lowercase.
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl HttpResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

/// Issues authenticated GET requests.
pub trait Transport {
    fn get(&self, url: &str, token: &str) -> Result<HttpResponse>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl Default for UreqTransport {
    fn default() -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str, token: &str) -> Result<HttpResponse> {
        let transport_err = |e: ureq::Error| Error::Transport {
            url: url.to_string(),
            message: e.to_string(),
        };
        let mut resp = self
            .agent
            .get(url)
            .header("Authorization", &format!("Bearer {token}"))
            .header("Accept", "application/vnd.github+json")
            .header("User-Agent", "tima")
            .call()
            .map_err(transport_err)?;
        let headers = resp
            .headers()
            .iter()
            .filter_map(|(k, v)| Some((k.as_str().to_ascii_lowercase(), v.to_str().ok()?.to_string())))
            .collect();
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(transport_err)?;
        Ok(HttpResponse { status, headers, body })
    }
}

pub fn token_from_env() -> Result<String> {
    match std::env::var(TOKEN_ENV) {
        Ok(t) if !t.trim().is_empty() => Ok(t),
        _ => Err(Error::InvalidConfig(format!("environment variable {TOKEN_ENV} is not set"))),
    }
}

/// Fetch every closed pull request of `owner/name` from api.github.com.
pub fn fetch_github(repo: &str, token: &str) -> Result<Vec<PullRequest>> {
    GithubClient::new(UreqTransport::default(), DEFAULT_API_BASE, token).fetch_closed_prs(repo)
}

pub struct GithubClient<T> {
    transport: T,
    base_url: String,
    token: String,
}

#[derive(Deserialize)]
struct ApiUser {
    login: String,
}

#[derive(Deserialize)]
struct ApiPull {
    number: u64,
    title: String,
    body: Option<String>,
    user: Option<ApiUser>,
    closed_at: Option<DateTime<Utc>>,
}

#[derive(Deserialize)]
struct ApiComment {
    user: Option<ApiUser>,
    body: Option<String>,
    created_at: DateTime<Utc>,
}

impl<T: Transport> GithubClient<T> {
    pub fn new(transport: T, base_url: &str, token: &str) -> Self {
        GithubClient {
            transport,
            base_url: base_url.trim_end_matches('/').to_string(),
            token: token.to_string(),
        }
    }

    pub fn fetch_closed_prs(&self, repo: &str) -> Result<Vec<PullRequest>> {
        validate_repo(repo)?;
        let pulls: Vec<ApiPull> = self.get_all(&format!(
            "{}/repos/{repo}/pulls?state=closed&per_page=100",
            self.base_url
        ))?;
        let mut prs = Vec::with_capacity(pulls.len());
        for pull in pulls {
            let n = pull.number;
            log::info!("fetching comments for {repo}#{n}");
            let mut comments: Vec<ApiComment> = self.get_all(&format!(
                "{}/repos/{repo}/issues/{n}/comments?per_page=100",
                self.base_url
            ))?;
            comments.extend(self.get_all::<ApiComment>(&format!(
                "{}/repos/{repo}/pulls/{n}/comments?per_page=100",
                self.base_url
            ))?);
            comments.sort_by_key(|c| c.created_at);

            let submitter = pull.user.map(|u| u.login).unwrap_or_default();
            let reviewers = comments
                .iter()
                .filter_map(|c| c.user.as_ref())
                .map(|u| u.login.clone())
                .filter(|login| *login != submitter)
                .collect();
            prs.push(PullRequest {
                id: n.to_string(),
                title: pull.title,
                description: pull.body.unwrap_or_default(),
                comments: comments.into_iter().filter_map(|c| c.body).collect(),
                submitter,
                reviewers,
                closed_at: pull.closed_at,
            });
        }
        Ok(prs)
    }

    /// Follow `Link: rel="next"` until the last page.
    fn get_all<R: for<'de> Deserialize<'de>>(&self, first: &str) -> Result<Vec<R>> {
        let mut items = Vec::new();
        let mut next = Some(first.to_string());
        while let Some(url) = next {
            let resp = self.transport.get(&url, &self.token)?;
            check_status(&url, &resp)?;
            let page: Vec<R> = serde_json::from_str(&resp.body).map_err(|e| Error::Parse {
                line: e.line(),
                message: format!("{url}: {e}"),
            })?;
            items.extend(page);
            next = resp.header("link").and_then(next_link);
        }
        Ok(items)
    }
}

fn validate_repo(repo: &str) -> Result<()> {
    let parts: Vec<&str> = repo.split('/').collect();
    if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::InvalidConfig(format!("repository must be owner/name, got `{repo}`")));
    }
    Ok(())
}

fn check_status(url: &str, resp: &HttpResponse) -> Result<()> {
    match resp.status {
        200..=299 => Ok(()),
        401 => Err(Error::Auth { status: 401 }),
        403 | 429 if resp.header("x-ratelimit-remaining") == Some("0") || resp.status == 429 => {
            let reset = resp
                .header("x-ratelimit-reset")
                .and_then(|v| v.trim().parse().ok())
                .unwrap_or(0);
            Err(Error::RateLimited { reset })
        }
        status => Err(Error::Http {
            url: url.to_string(),
            status,
            retryable: status >= 500,
        }),
    }
}

fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let mut pieces = part.split(';');
        let target = pieces.next()?.trim();
        let is_next = pieces.any(|p| p.trim() == "rel=\"next\"");
        (is_next && target.starts_with('<') && target.ends_with('>'))
            .then(|| target[1..target.len() - 1].to_string())
    })
}
