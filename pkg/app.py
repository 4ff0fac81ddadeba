"""
Run Browser - Interactive Dashboard
Streamlit application for inspecting finished simulation runs

    streamlit run app.py
"""

import json
from pathlib import Path

import streamlit as st

from analysis.run_analysis import RunAnalyzer
from driver.config import Settings

st.set_page_config(
    page_title="Richards Run Browser",
    page_icon="💧",
    layout="wide",
    initial_sidebar_state="expanded"
)

st.markdown("""
<style>
    .main-header {
        font-size: 2.5rem;
        font-weight: bold;
        color: #1f77b4;
        text-align: center;
        margin-bottom: 2rem;
    }
</style>
""", unsafe_allow_html=True)


def find_runs(root: Path):
    """Run directories are the ones holding a run_log.csv"""
    if not root.exists():
        return []
    return sorted(p.parent for p in root.glob("*/run_log.csv"))


@st.cache_resource
def load_run(path: str) -> RunAnalyzer:
    return RunAnalyzer(path, verbose=False)


st.markdown('<div class="main-header">💧 Richards Run Browser</div>', unsafe_allow_html=True)
st.markdown("---")

settings = Settings.from_env()

with st.sidebar:
    st.title("Runs")
    root = Path(st.text_input("Output root", value=settings.output_dir))
    runs = find_runs(root)
    if not runs:
        st.warning(f"No runs found under '{root}/'")
        st.stop()
    selected = st.selectbox("Select run:", runs, format_func=lambda p: p.name)
    page = st.radio("Select page:", ["🏠 Overview", "🌊 Fluxes", "📍 Probes", "📄 Summary"])

analyzer = load_run(str(selected))
stats = analyzer.step_statistics()

# ============================================================
# PAGE 1: OVERVIEW
# ============================================================
if page == "🏠 Overview":
    st.header("📊 Run Overview")

    col1, col2, col3, col4 = st.columns(4)
    col1.metric("✅ Accepted steps", stats["accepted_steps"])
    col2.metric("↩️ Rejected steps", stats["rejected_steps"])
    col3.metric("🔁 PCG iterations", stats.get("pcg_total", 0))
    col4.metric("⚖️ Mass error [m³]", f"{stats.get('final_mass_error', 0.0):.2e}")

    st.markdown("---")
    st.subheader("⏱️ Time step")
    st.plotly_chart(analyzer.time_step_figure(), use_container_width=True)

    st.subheader("📈 Column-average pressure head")
    mean_head = analyzer.column_average_pressure().reset_index()
    st.line_chart(mean_head, x="t", y="mean_head")

    if not analyzer.rejected.empty:
        st.subheader("↩️ Rejected steps")
        st.dataframe(analyzer.rejected, use_container_width=True, hide_index=True)

# ============================================================
# PAGE 2: FLUXES
# ============================================================
elif page == "🌊 Fluxes":
    st.header("🌊 Boundary Fluxes")
    st.plotly_chart(analyzer.flux_figure(), use_container_width=True)
    rows = [{"patch": p, "final outward flux [m³/s]": analyzer.flux_plateau(p, window=1)}
            for p in analyzer.patches]
    st.dataframe(rows, use_container_width=True, hide_index=True)

# ============================================================
# PAGE 3: PROBES
# ============================================================
elif page == "📍 Probes":
    st.header("📍 Probes")
    if analyzer.probes.empty:
        st.info("This run has no probes")
    else:
        quantity = st.radio("Quantity:", ["theta", "h"], horizontal=True)
        st.plotly_chart(analyzer.probe_figure(quantity), use_container_width=True)
        st.dataframe(analyzer.probes, use_container_width=True, hide_index=True)

# ============================================================
# PAGE 4: SUMMARY
# ============================================================
elif page == "📄 Summary":
    st.header("📄 run_summary.json")
    if analyzer.summary:
        st.json(analyzer.summary)
        st.download_button(
            label="📥 Download summary",
            data=json.dumps(analyzer.summary, indent=2),
            file_name=f"{selected.name}_summary.json",
            mime="application/json"
        )
    else:
        st.info("No summary written for this run")

st.markdown("---")
st.caption(f"Run directory: {selected}")
