#include "tgscrape/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tgscrape/error.hpp"

namespace tgscrape::config {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_hex(char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; }

constexpr std::string_view kWebClientPrefix = "https://web.telegram.org";
constexpr std::string_view kShareLinkPrefix = "https://t.me/";

}  // namespace

void validate_credentials(const Credentials& creds) {
  std::vector<FieldIssue> issues;
  if (creds.username.empty())
    issues.push_back({"username", "empty"});
  else if (creds.username.find('@') != std::string::npos)
    issues.push_back({"username", "must not contain '@'"});

  const auto& phone = creds.phone;
  auto digits = phone.size() > 0 ? phone.size() - 1 : 0;
  if (phone.empty() || phone.front() != '+' || digits < 7 || digits > 15 ||
      !std::all_of(phone.begin() + 1, phone.end(), is_digit)) {
    issues.push_back({"phone", "expected '+' followed by 7-15 digits"});
  }
  if (creds.api_id.empty() || !std::all_of(creds.api_id.begin(), creds.api_id.end(), is_digit))
    issues.push_back({"api_id", "expected a numeric identifier"});
  if (creds.api_hash.size() != 32 ||
      !std::all_of(creds.api_hash.begin(), creds.api_hash.end(), is_hex)) {
    issues.push_back({"api_hash", "expected 32 hexadecimal characters"});
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

Credentials parse_credentials(std::string_view text) {
  Credentials creds;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    auto eq = l.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError("credentials", fmt::format("line {}: expected key=value", lineno));
    auto key = trim(l.substr(0, eq));
    auto value = std::string(trim(l.substr(eq + 1)));
    if (key == "username")
      creds.username = value;
    else if (key == "phone")
      creds.phone = value;
    else if (key == "api_id")
      creds.api_id = value;
    else if (key == "api_hash")
      creds.api_hash = value;
    else
      throw ValidationError("credentials", fmt::format("line {}: unknown key '{}'", lineno, key));
  }
  validate_credentials(creds);
  return creds;
}

Credentials load_credentials(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot read credentials file '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_credentials(buf.str());
}

std::optional<Credentials> credentials_from_env() {
  auto get = [](const char* name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name)) return std::string(v);
    return std::nullopt;
  };
  auto user = get("TGSCRAPE_USERNAME");
  auto phone = get("TGSCRAPE_PHONE");
  auto id = get("TGSCRAPE_API_ID");
  auto hash = get("TGSCRAPE_API_HASH");
  if (!user && !phone && !id && !hash) return std::nullopt;
  Credentials creds{user.value_or(""), phone.value_or(""), id.value_or(""), hash.value_or("")};
  validate_credentials(creds);
  return creds;
}

ChannelRef ChannelRef::parse(std::string_view item) {
  item = trim(item);
  auto reject = [&](std::string_view why) {
    return ValidationError("channels", fmt::format("'{}': {}", item, why));
  };
  if (item.empty()) throw reject("empty handle");
  if (starts_with(item, kWebClientPrefix))
    throw reject("web client links are not supported; use @name or https://t.me/name");
  if (std::all_of(item.begin(), item.end(), [](char c) { return is_digit(c) || c == '-'; }))
    throw reject("numeric chat ids are not supported; use @name or https://t.me/name");
  if (std::any_of(item.begin(), item.end(), is_space)) throw reject("contains whitespace");

  if (starts_with(item, kShareLinkPrefix)) {
    auto slug = item.substr(kShareLinkPrefix.size());
    if (!slug.empty() && slug.back() == '/') slug.remove_suffix(1);
    if (slug.empty() || slug.find('/') != std::string_view::npos)
      throw reject("expected https://t.me/<name>");
    if (slug.front() == '@') slug.remove_prefix(1);
    return ChannelRef("@" + std::string(slug));
  }
  return ChannelRef(std::string(item));
}

std::vector<ChannelRef> parse_channel_list(std::string_view raw) {
  std::vector<ChannelRef> out;
  std::size_t start = 0;
  while (start <= raw.size()) {
    auto comma = raw.find(',', start);
    auto end = comma == std::string_view::npos ? raw.size() : comma;
    auto item = trim(raw.substr(start, end - start));
    if (!item.empty()) out.push_back(ChannelRef::parse(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join_channel_list(const std::vector<ChannelRef>& channels) {
  std::string out;
  for (const auto& c : channels) {
    if (!out.empty()) out += ", ";
    out += c.handle();
  }
  return out;
}

DateWindow parse_date_window(std::string_view date_min, std::string_view date_max) {
  DateWindow w;
  try {
    w.date_min = parse_iso_date(trim(date_min));
  } catch (const Error& e) {
    throw ValidationError("date_min", e.what());
  }
  try {
    w.date_max = parse_iso_date(trim(date_max));
  } catch (const Error& e) {
    throw ValidationError("date_max", e.what());
  }
  if (w.date_min > w.date_max)
    throw ValidationError("date_min", fmt::format("{} is after date_max {}", trim(date_min),
                                                  trim(date_max)));
  return w;
}

OutputFormat normalize_output_format(std::string_view raw) {
  std::string norm;
  for (char c : raw) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalpha(u)) norm += static_cast<char>(std::tolower(u));
  }
  if (norm == "excel") return OutputFormat::workbook;
  if (norm == "parquet") return OutputFormat::parquet;
  throw ValidationError("format", fmt::format("'{}' is not one of excel, parquet", raw));
}

std::string_view format_flag_value(OutputFormat fmt) {
  return fmt == OutputFormat::workbook ? "excel" : "parquet";
}

std::string_view file_extension(OutputFormat fmt) {
  return fmt == OutputFormat::workbook ? "xlsx" : "parquet";
}

ValidatedJob validate_job(ScrapeJobSpec spec) {
  std::vector<FieldIssue> issues;
  if (spec.channels.empty()) issues.push_back({"channels", "empty"});
  if (spec.window.date_min > spec.window.date_max)
    issues.push_back({"date_min", "after date_max"});
  if (spec.file_name.empty())
    issues.push_back({"file_name", "empty"});
  else if (spec.file_name.find_first_of("/\\") != std::string::npos)
    issues.push_back({"file_name", "must not contain path separators"});
  if (spec.max_t_index < 1) issues.push_back({"max_t_index", "must be at least 1"});
  if (spec.time_limit < 1) issues.push_back({"time_limit", "must be at least 1"});
  if (!issues.empty()) throw ValidationError(std::move(issues));

  std::vector<std::string> warnings;
  if (spec.time_limit > kRecommendedTimeLimit) {
    warnings.push_back(fmt::format(
        "time_limit {} s exceeds {} s; hosted notebook runtimes are typically killed after "
        "about 6h20m (22800 s), so keep the limit within that",
        spec.time_limit, kRecommendedTimeLimit));
  }
  return ValidatedJob(std::move(spec), std::move(warnings));
}

}  // namespace tgscrape::config
