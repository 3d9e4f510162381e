#include "tgscrape/error.hpp"

namespace tgscrape {

ValidationError::ValidationError(std::vector<FieldIssue> issues)
    : Error([&] {
        std::string msg;
        for (const auto& i : issues) {
          if (!msg.empty()) msg += "; ";
          msg += i.field + ": " + i.message;
        }
        return msg;
      }()),
      issues_(std::move(issues)) {}

ValidationError::ValidationError(std::string field, std::string message)
    : ValidationError(std::vector<FieldIssue>{{std::move(field), std::move(message)}}) {}

}  // namespace tgscrape
