#pragma once

// Recorded request/response fixtures for the HTTP service, and a scripted
// interview driver shared by the unit tests and the acceptance binary.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "lite/service.hpp"

namespace lite::testing {

// Fixed clock and sequential session ids.
ServiceConfig deterministic_config(const std::filesystem::path& manifest);

// Replaces session ids with {session}, {session2}, ... and clock values
// with 0.
std::string normalize_body(std::string body, const std::vector<std::string>& ids);

struct FixtureMismatch {
  std::string request;
  std::string field;  // status, content_type or body
  std::string expected;
  std::string actual;
};

struct FixtureRun {
  std::size_t exchanges = 0;
  std::vector<FixtureMismatch> mismatches;
};

// Replays a fixture file against a fresh Service. With `record` set, the
// file is rewritten with the observed responses instead.
FixtureRun run_fixture(const std::filesystem::path& file, bool record = false);

using Handler =
    std::function<HttpResponse(std::string_view, std::string_view, std::string_view)>;

// Creates a malaria session and answers every field with answers[pick % n]
// until END or `max_fields`. Returns the normalized export document.
std::string scripted_interview(const Handler& h, const std::filesystem::path& malaria_dir,
                               std::size_t pick, std::size_t max_fields = 100);

}  // namespace lite::testing
