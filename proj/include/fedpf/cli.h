// Copyright 2026 The FedPF Simulator Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FEDPF_CLI_H_
#define FEDPF_CLI_H_

namespace fedpf {

// Exit codes: 0 success, 1 runtime failure, 2 bad configuration.
int RunCli(int argc, char** argv);

}  // namespace fedpf

#endif  // FEDPF_CLI_H_
