#include "crdtpaxos/replica.hpp"

namespace crdtpaxos {

template class Replica<CrdtState>;
template class Replica<CausalTaggedState<CrdtState>>;

}  // namespace crdtpaxos
