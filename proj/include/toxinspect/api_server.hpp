#pragma once

// JSON-over-HTTP facade for a Workspace.
//
//   POST /sessions                                  {mode, config}        -> {id}
//   POST /sessions/import                           archive               -> {id}
//   GET  /sessions/{id}                                                   -> info
//   POST /sessions/{id}/dataset                     JSON or multipart     -> ingest summary
//   POST /sessions/{id}/seed                        {scorer, threshold}   -> seeding summary
//   GET  /sessions/{id}/diagnosis                                         -> DiagnosisSummary
//   GET  /sessions/{id}/batch                                             -> open batch
//   POST /sessions/{id}/corrections                 {iteration, corrections} -> MetricsReport
//   GET  /sessions/{id}/metrics                                           -> {history}
//   GET  /sessions/{id}/comments/{cid}/explanation?k=10                   -> Explanation
//   GET  /sessions/{id}/explanation?k=10                                  -> global terms
//   GET  /sessions/{id}/export                                            -> archive
//
// Errors are {"error": {"code", "message", "detail"}} with the code drawn from
// bad_request, not_found, conflict, session_complete, upstream_failure.

#include <memory>
#include <string>

#include "toxinspect/error.hpp"
#include "toxinspect/workspace.hpp"

namespace toxinspect {

int http_status(ErrorCode code);

class ApiServer {
 public:
  explicit ApiServer(Workspace& workspace);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Blocks until stop().
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it; follow with listen_after_bind().
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace toxinspect
