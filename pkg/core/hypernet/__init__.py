"""
Hypernetworks - weight generators for the main classifier

Modules:
- layout.py      : MainNetLayout, build_layout (flattening order, chunk arithmetic)
- embeddings.py  : EmbeddingBank (task and chunk embeddings)
- ff.py          : chunked feed-forward generator (HNET)
- lstm.py        : dependency-preserving LSTM generator (LSTM_NET)
- grow.py        : per-task growth on a frozen recurrent core (LSTM_NET_GROW)
- state.py       : HypernetState, init_state, task lifecycle
- generate.py    : generate_main_params, generate_for_task
"""
